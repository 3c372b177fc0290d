#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rankone/grid.hpp"
#include "rankone/material.hpp"
#include "rankone/types.hpp"

namespace rankone {

/// Minimizing laminate of one node in one sweep. The two phases are
/// F- = F + l_minus delta R and F+ = F + l_plus delta R, with weight lambda on F+.
struct LaminateRecord {
  std::int32_t iteration = 0;
  std::int32_t direction = 0;
  std::int32_t l_minus = 0;
  std::int32_t l_plus = 0;
  double lambda = 0.0;
};

/// Laminate records keyed by (node, iteration), stored per node in increasing
/// iteration order.
struct LaminationForest {
  GridSpec spec;
  double line_step = 0.0;
  int iterations = 0;
  std::vector<Matrix> directions;  // R per direction index
  std::vector<Vector> normals;     // b / |b| up to sign, first nonzero entry positive
  std::vector<std::int64_t> offsets;  // node_count + 1 entries
  std::vector<LaminateRecord> records;

  [[nodiscard]] std::size_t size() const noexcept { return records.size(); }

  /// Record with the largest iteration <= depth, or nullptr.
  [[nodiscard]] const LaminateRecord* lookup(std::int64_t node, int depth) const;

  /// Largest iteration with a record for this node, 0 if none.
  [[nodiscard]] int highest_order(std::int64_t node) const;

  /// F- and F+ of a record attached to node coordinates f.
  [[nodiscard]] Matrix phase(const Matrix& f, const LaminateRecord& rec, bool plus) const;
};

struct LaminationTree {
  enum class Branch { Leaf, Lamination, Interpolation };

  Matrix f;
  double xi = 1.0;  // weight relative to the parent
  int k = 0;        // envelope iterate this node represents
  Branch branch = Branch::Leaf;
  int direction = -1;  // lamination branchings only
  std::vector<LaminationTree> children;
};

/// Decomposes the iterate-`startdepth` envelope value at f into laminate and
/// interpolation branchings. On-node points branch into (F-, F+) using the
/// laminate recorded at the largest iteration <= k, both children at that
/// iteration minus one; off-node points branch into their cell corners at the
/// same k. Leaves are depth 0, laminate-free nodes, or off-node points at k = 0.
/// Throws OutOfDomain, MissingForest for an empty forest spec.
LaminationTree buildtree(const Matrix& f, const LaminationForest& forest, int startdepth);

/// Weighted sum of the unrelaxed material response over the tree.
StressTangentPair eval(const LaminationTree& tree, const MaterialSpec& spec, const HistoryState& hist);

/// Same result as eval(buildtree(...)) without materializing the tree; shared
/// subtrees (same node, same k) are evaluated once.
StressTangentPair eval_envelope(const Matrix& f, const LaminationForest& forest, int startdepth,
                                const MaterialSpec& spec, const HistoryState& hist);

struct HmEntry {
  double xi;
  Matrix f;
};

/// Leaves with their products of edge weights, in depth-first order. Verifies
/// that every lamination branching joins rank-one connected children;
/// throws HmViolation otherwise.
std::vector<HmEntry> extract_hm(const LaminationTree& tree);

struct Microstructure {
  struct Leaf {
    Matrix f;
    double xi;
    double damage;
  };
  struct Branching {
    Vector normal;
    int level;
    double lambda;
  };
  std::vector<Leaf> leaves;
  std::vector<Branching> branchings;
};

/// Leaf fractions with damage D(max(beta_k, psi0)), and per lamination
/// branching the unit normal b / |b| of its direction.
Microstructure microstructure(const LaminationTree& tree, const LaminationForest& forest,
                              const MaterialSpec& spec, const HistoryState& hist);

/// Gradient of the multilinear interpolant of the envelope, averaged over the
/// cells adjacent to f. A component whose adjacent slopes change sign is set
/// to zero; degenerate axes contribute zero. Throws OutOfDomain.
Matrix subdifferential_stress(const ScalarField& envelope, const Matrix& f);

/// Nested {F, xi, k, children} tree plus flat leaves and branchings lists.
void write_tree_json(std::ostream& os, const LaminationTree& tree, const Microstructure& micro);

}  // namespace rankone
