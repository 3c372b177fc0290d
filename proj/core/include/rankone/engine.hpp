#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rankone/directions.hpp"
#include "rankone/forest.hpp"
#include "rankone/grid.hpp"
#include "rankone/material.hpp"

namespace rankone {

struct RelaxationConfig {
  enum class Variant { Pointwise };

  double tol = 1e-4;
  int k_max = 20;
  DirectionSet directions;
  bool track_forest = false;
  Variant variant = Variant::Pointwise;
  int threads = 1;
  /// Spacing of line samples F + l * line_step * R; 0 picks the grid step.
  double line_step = 0.0;
  /// Called after every sweep with (k, max decrease).
  std::function<void(int, double)> on_iteration;
};

struct RelaxationResult {
  ScalarField envelope;
  int iterations = 0;
  std::vector<double> max_decrease;  // entry k-1 belongs to sweep k
  std::vector<int> lamination_order;  // last sweep that lowered the node; -1 for sentinels
  std::optional<LaminationForest> forest;
};

/// Samples W over the grid. Points where the material throws
/// NonPositiveJacobian receive `invalid_value`; with `positive_det_only` so do
/// all points with det F <= 0, whatever the model.
ScalarField sample_potential(const GridSpec& grid, const MaterialSpec& spec, const HistoryState& hist,
                             int threads = 1, double invalid_value = kSentinel, bool positive_det_only = false);

/// Successive pointwise lamination until the largest nodal decrease is <= tol
/// or k_max sweeps are done. Throws ConfigError for an empty direction set.
RelaxationResult relax(const ScalarField& initial, const RelaxationConfig& cfg);

/// Largest prev - next over nodes finite in prev. Throws SpecMismatch.
double max_decrease(const ScalarField& prev, const ScalarField& next);

/// |ref - cand| / (gamma + |ref|) per node. Throws SpecMismatch.
ScalarField relative_error(const ScalarField& reference, const ScalarField& candidate, double gamma = 1e-8);

/// Two-axis section through the grid. All other axes are fixed at the node
/// nearest to the identity (1 on the diagonal, 0 off it).
struct SliceTable {
  int row_axis = 0;
  int col_axis = 1;
  std::vector<double> row_coords;
  std::vector<double> col_coords;
  std::vector<std::vector<std::int64_t>> nodes;  // [row][col] flat indices
};

/// Throws OutOfDomain for invalid or equal axes.
SliceTable slice(const GridSpec& grid, int row_axis, int col_axis);

/// Writes the slice as a CSV matrix: header row of column coordinates, then
/// one row per row coordinate.
void write_slice_csv(std::ostream& os, const SliceTable& table, const std::vector<double>& values);

}  // namespace rankone
