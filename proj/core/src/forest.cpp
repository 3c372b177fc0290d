#include "rankone/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>

#include <Eigen/SVD>

#include "json.hpp"

#include "rankone/error.hpp"

namespace rankone {

const LaminateRecord* LaminationForest::lookup(std::int64_t node, int depth) const {
  if (offsets.empty()) return nullptr;
  const auto first = records.begin() + offsets[static_cast<std::size_t>(node)];
  const auto last = records.begin() + offsets[static_cast<std::size_t>(node) + 1];
  // Records of one node are sorted by iteration.
  auto it = std::upper_bound(first, last, depth,
                             [](int k, const LaminateRecord& r) { return k < r.iteration; });
  if (it == first) return nullptr;
  return &*(it - 1);
}

int LaminationForest::highest_order(std::int64_t node) const {
  if (offsets.empty()) return 0;
  const auto b = offsets[static_cast<std::size_t>(node)];
  const auto e = offsets[static_cast<std::size_t>(node) + 1];
  return e > b ? records[static_cast<std::size_t>(e - 1)].iteration : 0;
}

Matrix LaminationForest::phase(const Matrix& f, const LaminateRecord& rec, bool plus) const {
  const double l = plus ? rec.l_plus : rec.l_minus;
  return f + l * line_step * directions[static_cast<std::size_t>(rec.direction)];
}

namespace {

double norm1(const Matrix& m) { return m.cwiseAbs().sum(); }

void require_forest(const LaminationForest& forest) {
  if (forest.spec.axis_count() == 0 || forest.offsets.size() != static_cast<std::size_t>(forest.spec.node_count()) + 1) {
    throw Error(ErrorCode::MissingForest, "no lamination forest recorded");
  }
}

// Weight of F+ from the entrywise 1-norm ratio |F - F-| / |F+ - F-|.
double plus_weight(const Matrix& f, const Matrix& fm, const Matrix& fp) {
  return norm1(f - fm) / norm1(fp - fm);
}

LaminationTree build(const Matrix& f, int k, double xi, const LaminationForest& forest) {
  LaminationTree t;
  t.f = f;
  t.xi = xi;
  t.k = k;
  if (k <= 0) return t;
  const GridSpec& grid = forest.spec;
  const std::int64_t node = grid.node_of(f);
  if (node >= 0) {
    const LaminateRecord* rec = forest.lookup(node, k);
    if (!rec) return t;
    const Matrix at = grid.point_at(node);
    const Matrix fm = forest.phase(at, *rec, false);
    const Matrix fp = forest.phase(at, *rec, true);
    const double lp = plus_weight(f, fm, fp);
    t.branch = LaminationTree::Branch::Lamination;
    t.direction = rec->direction;
    t.children.push_back(build(fm, rec->iteration - 1, 1.0 - lp, forest));
    t.children.push_back(build(fp, rec->iteration - 1, lp, forest));
    return t;
  }
  const CellDecomposition cell = decompose(grid, f);
  t.branch = LaminationTree::Branch::Interpolation;
  for (std::size_t i = 0; i < cell.nodes.size(); ++i) {
    t.children.push_back(build(grid.point_at(cell.nodes[i]), k, cell.weights[i], forest));
  }
  return t;
}

void accumulate(StressTangentPair& acc, const StressTangentPair& x, double w) {
  acc.energy += w * x.energy;
  acc.stress += w * x.stress;
  acc.tangent += w * x.tangent;
}

StressTangentPair zero_pair(int d) {
  StressTangentPair z;
  z.stress = Matrix::Zero(d, d);
  z.tangent = Tangent::Zero(d * d, d * d);
  return z;
}

class MemoEvaluator {
 public:
  MemoEvaluator(const LaminationForest& forest, const MaterialSpec& spec, const HistoryState& hist)
      : forest_(forest), spec_(spec), hist_(hist) {}

  StressTangentPair at(const Matrix& f, int k) {
    if (k <= 0) return stress_and_tangent(f, hist_, spec_);
    const std::int64_t node = forest_.spec.node_of(f);
    if (node >= 0) return at_node(node, k);
    const CellDecomposition cell = decompose(forest_.spec, f);
    StressTangentPair acc = zero_pair(forest_.spec.dim());
    for (std::size_t i = 0; i < cell.nodes.size(); ++i) accumulate(acc, at_node(cell.nodes[i], k), cell.weights[i]);
    return acc;
  }

 private:
  StressTangentPair at_node(std::int64_t node, int k) {
    const LaminateRecord* rec = forest_.lookup(node, k);
    const int level = rec ? rec->iteration : 0;
    const std::uint64_t key = (static_cast<std::uint64_t>(node) << 8) | static_cast<std::uint64_t>(level);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const Matrix f = forest_.spec.point_at(node);
    StressTangentPair out;
    if (!rec) {
      out = stress_and_tangent(f, hist_, spec_);
    } else {
      const Matrix fm = forest_.phase(f, *rec, false);
      const Matrix fp = forest_.phase(f, *rec, true);
      const double lp = plus_weight(f, fm, fp);
      out = zero_pair(forest_.spec.dim());
      accumulate(out, at(fm, rec->iteration - 1), 1.0 - lp);
      accumulate(out, at(fp, rec->iteration - 1), lp);
    }
    cache_.emplace(key, out);
    return out;
  }

  const LaminationForest& forest_;
  const MaterialSpec& spec_;
  const HistoryState& hist_;
  std::unordered_map<std::uint64_t, StressTangentPair> cache_;
};

void collect_leaves(const LaminationTree& t, double w, std::vector<HmEntry>& out) {
  if (t.children.empty()) {
    out.push_back({w, t.f});
    return;
  }
  if (t.branch == LaminationTree::Branch::Lamination) {
    if (t.children.size() != 2) throw Error(ErrorCode::HmViolation, "lamination branching needs two children");
    const Matrix jump = t.children[1].f - t.children[0].f;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jump);
    const auto& s = svd.singularValues();
    if (s.size() > 1 && s(1) > 1e-8 * s(0)) {
      throw Error(ErrorCode::HmViolation, "laminate phases are not rank-one connected");
    }
  }
  double sum = 0.0;
  Matrix mean = Matrix::Zero(t.f.rows(), t.f.cols());
  for (const auto& c : t.children) {
    sum += c.xi;
    mean += c.xi * c.f;
  }
  if (std::abs(sum - 1.0) > 1e-10 || (mean - t.f).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorCode::HmViolation, "children do not average to their parent");
  }
  for (const auto& c : t.children) collect_leaves(c, w * c.xi, out);
}

void collect_branchings(const LaminationTree& t, const LaminationForest& forest,
                        std::vector<Microstructure::Branching>& out) {
  if (t.branch == LaminationTree::Branch::Lamination) {
    out.push_back({forest.normals[static_cast<std::size_t>(t.direction)], t.children[0].k + 1, t.children[1].xi});
  }
  for (const auto& c : t.children) collect_branchings(c, forest, out);
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json tree_json(const LaminationTree& t) {
  nlohmann::json j;
  j["F"] = matrix_json(t.f);
  j["xi"] = t.xi;
  j["k"] = t.k;
  switch (t.branch) {
    case LaminationTree::Branch::Leaf: j["branch"] = "leaf"; break;
    case LaminationTree::Branch::Lamination: j["branch"] = "lamination"; break;
    case LaminationTree::Branch::Interpolation: j["branch"] = "interpolation"; break;
  }
  j["children"] = nlohmann::json::array();
  for (const auto& c : t.children) j["children"].push_back(tree_json(c));
  return j;
}

}  // namespace

LaminationTree buildtree(const Matrix& f, const LaminationForest& forest, int startdepth) {
  require_forest(forest);
  if (!forest.spec.contains(f)) throw Error(ErrorCode::OutOfDomain, "tree root outside grid");
  return build(f, std::min(startdepth, forest.iterations), 1.0, forest);
}

StressTangentPair eval(const LaminationTree& tree, const MaterialSpec& spec, const HistoryState& hist) {
  if (tree.children.empty()) return stress_and_tangent(tree.f, hist, spec);
  StressTangentPair acc = zero_pair(static_cast<int>(tree.f.rows()));
  for (const auto& c : tree.children) accumulate(acc, eval(c, spec, hist), c.xi);
  return acc;
}

StressTangentPair eval_envelope(const Matrix& f, const LaminationForest& forest, int startdepth,
                                const MaterialSpec& spec, const HistoryState& hist) {
  require_forest(forest);
  if (!forest.spec.contains(f)) throw Error(ErrorCode::OutOfDomain, "query outside grid");
  MemoEvaluator ev(forest, spec, hist);
  return ev.at(f, std::min(startdepth, forest.iterations));
}

std::vector<HmEntry> extract_hm(const LaminationTree& tree) {
  std::vector<HmEntry> out;
  collect_leaves(tree, 1.0, out);
  return out;
}

Microstructure microstructure(const LaminationTree& tree, const LaminationForest& forest,
                              const MaterialSpec& spec, const HistoryState& hist) {
  Microstructure m;
  for (const auto& e : extract_hm(tree)) {
    const double beta = std::max(hist.beta_k, effective_energy(e.f, spec));
    m.leaves.push_back({e.f, e.xi, damage_value(beta, spec)});
  }
  collect_branchings(tree, forest, m.branchings);
  return m;
}

Matrix subdifferential_stress(const ScalarField& envelope, const Matrix& f) {
  const GridSpec& grid = envelope.spec;
  const int d = grid.dim();
  const int axes = grid.axis_count();
  const CellLocation loc = locate(grid, f);

  // Per axis, the candidate lower-corner indices of adjacent cells and the
  // local coordinate inside each.
  std::array<std::array<std::int64_t, 2>, 9> lower{};
  std::array<std::array<double, 2>, 9> local{};
  std::array<int, 9> options{};
  for (int a = 0; a < axes; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const std::int64_t n = grid.count(a);
    if (n == 1) {
      options[sa] = 1;
      lower[sa][0] = 0;
      local[sa][0] = 0.0;
    } else if (loc.frac[sa] != 0.0) {
      options[sa] = 1;
      lower[sa][0] = loc.base[sa];
      local[sa][0] = loc.frac[sa];
    } else {
      const std::int64_t i = loc.base[sa];
      int o = 0;
      if (i > 0) {
        lower[sa][static_cast<std::size_t>(o)] = i - 1;
        local[sa][static_cast<std::size_t>(o++)] = 1.0;
      }
      if (i < n - 1) {
        lower[sa][static_cast<std::size_t>(o)] = i;
        local[sa][static_cast<std::size_t>(o++)] = 0.0;
      }
      options[sa] = o;
    }
  }

  std::array<double, 9> sum{};
  std::array<double, 9> lo{};
  std::array<double, 9> hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  int cells = 0;

  std::array<int, 9> pick{};
  for (;;) {
    // Gradient of the multilinear interpolant of this cell at f.
    for (int a = 0; a < axes; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      if (grid.count(a) == 1) continue;
      double g = 0.0;
      for (unsigned mask = 0; mask < (1U << axes); ++mask) {
        bool skip = false;
        double w = 1.0;
        std::int64_t node = 0;
        for (int b = 0; b < axes; ++b) {
          const auto sb = static_cast<std::size_t>(b);
          const bool upper = (mask >> b) & 1U;
          const std::int64_t idx = lower[sb][static_cast<std::size_t>(pick[sb])] + (upper ? 1 : 0);
          if (idx >= grid.count(b)) {
            skip = true;
            break;
          }
          const double t = local[sb][static_cast<std::size_t>(pick[sb])];
          if (b == a) {
            w *= upper ? 1.0 : -1.0;
          } else {
            w *= upper ? t : 1.0 - t;
          }
          node += idx * grid.stride(b);
        }
        if (skip || w == 0.0) continue;
        const double v = envelope.values[static_cast<std::size_t>(node)];
        if (v == kSentinel) throw Error(ErrorCode::OutOfDomain, "sentinel node adjacent to stress query");
        g += w * v;
      }
      g /= grid.axis(a).step;
      sum[sa] += g;
      lo[sa] = std::min(lo[sa], g);
      hi[sa] = std::max(hi[sa], g);
    }
    ++cells;
    int a = 0;
    for (; a < axes; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      if (++pick[sa] < options[sa]) break;
      pick[sa] = 0;
    }
    if (a == axes) break;
  }

  Matrix p = Matrix::Zero(d, d);
  for (int a = 0; a < axes; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    if (grid.count(a) == 1) continue;
    if (lo[sa] < 0.0 && hi[sa] > 0.0) continue;
    p(a / d, a % d) = sum[sa] / cells;
  }
  return p;
}

void write_tree_json(std::ostream& os, const LaminationTree& tree, const Microstructure& micro) {
  nlohmann::json j;
  j["tree"] = tree_json(tree);
  j["leaves"] = nlohmann::json::array();
  for (const auto& l : micro.leaves) {
    j["leaves"].push_back({{"F", matrix_json(l.f)}, {"xi", l.xi}, {"damage", l.damage}});
  }
  j["branchings"] = nlohmann::json::array();
  for (const auto& b : micro.branchings) {
    std::vector<double> n(b.normal.data(), b.normal.data() + b.normal.size());
    j["branchings"].push_back({{"normal", n}, {"level", b.level}, {"lambda", b.lambda}});
  }
  os << j.dump(2) << '\n';
}

}  // namespace rankone
