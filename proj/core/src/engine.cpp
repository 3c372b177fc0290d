#include "rankone/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/LU>

#include "rankone/convexify1d.hpp"
#include "rankone/csv.hpp"
#include "rankone/error.hpp"
#include "rankone/parallel.hpp"

namespace rankone {

namespace {

constexpr std::size_t kBlock = 1024;
constexpr int kMaxAxes = 9;

// Relative margin a candidate must undercut the current value by. Without it,
// rounding in the chord evaluation records spurious laminates on affine
// stretches, where the hull at a collinear node equals the node value exactly.
constexpr double kDecreaseMargin = 1e-14;

struct LinePlan {
  bool aligned = false;
  std::array<std::int64_t, kMaxAxes> inc{};  // node increments per unit l, aligned only
  std::int64_t flat_step = 0;
  Matrix step;  // line_step * R
};

struct Pending {
  std::int64_t node;
  LaminateRecord rec;
};

// Multilinear interpolation without allocation; mirrors grid::interpolate.
double interpolate_fast(const GridSpec& grid, const std::vector<double>& values, const Matrix& p) {
  const int d = grid.dim();
  const int axes = grid.axis_count();
  std::array<int, kMaxAxes> active{};
  std::array<double, kMaxAxes> frac{};
  int m = 0;
  std::int64_t base = 0;
  for (int a = 0; a < axes; ++a) {
    const auto& ax = grid.axis(a);
    const std::int64_t n = grid.count(a);
    const double t = (p(a / d, a % d) - ax.min) / ax.step;
    if (!(t >= -kNodeTolerance && t <= static_cast<double>(n - 1) + kNodeTolerance)) {
      throw Error(ErrorCode::OutOfDomain, "line point outside grid");
    }
    const double r = std::round(t);
    if (std::abs(t - r) <= kNodeTolerance) {
      base += std::clamp<std::int64_t>(static_cast<std::int64_t>(r), 0, n - 1) * grid.stride(a);
    } else {
      const auto lo = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(t)), 0, n - 2);
      base += lo * grid.stride(a);
      frac[static_cast<std::size_t>(m)] = t - static_cast<double>(lo);
      active[static_cast<std::size_t>(m)] = a;
      ++m;
    }
  }
  double v = 0.0;
  for (unsigned mask = 0; mask < (1U << m); ++mask) {
    std::int64_t node = base;
    double w = 1.0;
    for (int j = 0; j < m; ++j) {
      const bool upper = (mask >> (m - 1 - j)) & 1U;
      const double t = frac[static_cast<std::size_t>(j)];
      w *= upper ? t : 1.0 - t;
      if (upper) node += grid.stride(active[static_cast<std::size_t>(j)]);
    }
    const double x = values[static_cast<std::size_t>(node)];
    if (x == kSentinel) return kSentinel;
    v += w * x;
  }
  return v;
}

std::vector<LinePlan> plan_lines(const GridSpec& grid, const DirectionSet& dirs, double line_step) {
  const int d = grid.dim();
  std::vector<LinePlan> plans;
  plans.reserve(dirs.size());
  for (const auto& dir : dirs.entries) {
    if (dir.r.rows() != d || dir.r.cols() != d) {
      throw Error(ErrorCode::ConfigError, "direction dimension does not match grid");
    }
    LinePlan plan;
    plan.step = line_step * dir.r;
    plan.aligned = true;
    for (int a = 0; a < grid.axis_count(); ++a) {
      const double q = plan.step(a / d, a % d) / grid.axis(a).step;
      const double rq = std::round(q);
      if (std::abs(q - rq) > 1e-9) {
        plan.aligned = false;
        break;
      }
      plan.inc[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(rq);
      plan.flat_step += static_cast<std::int64_t>(rq) * grid.stride(a);
    }
    plans.push_back(plan);
  }
  return plans;
}

LineRange aligned_range(const GridSpec& grid, const LinePlan& plan, const std::int64_t* idx) {
  LineRange r{std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::max()};
  bool any = false;
  for (int a = 0; a < grid.axis_count(); ++a) {
    const std::int64_t inc = plan.inc[static_cast<std::size_t>(a)];
    if (inc == 0) continue;
    any = true;
    const std::int64_t i = idx[a];
    const std::int64_t top = grid.count(a) - 1 - i;
    if (inc > 0) {
      r.lo = std::max(r.lo, -(i / inc));
      r.hi = std::min(r.hi, top / inc);
    } else {
      r.lo = std::max(r.lo, -(top / -inc));
      r.hi = std::min(r.hi, i / -inc);
    }
  }
  if (!any) return {0, 0};
  return r;
}

struct Scratch {
  std::vector<double> x, w, y, c;
  void ensure(std::size_t n) {
    if (x.size() < n) {
      x.resize(n);
      w.resize(n);
      y.resize(n);
      c.resize(n);
    }
  }
};

void advance(const GridSpec& grid, std::int64_t* idx) {
  for (int a = grid.axis_count() - 1; a >= 0; --a) {
    if (++idx[a] < grid.count(a)) return;
    idx[a] = 0;
  }
}

void unflatten(const GridSpec& grid, std::int64_t flat, std::int64_t* idx) {
  for (int a = 0; a < grid.axis_count(); ++a) {
    idx[a] = flat / grid.stride(a);
    flat -= idx[a] * grid.stride(a);
  }
}

struct BlockResult {
  double max_decrease = 0.0;
  std::vector<Pending> laminates;
};

// One pointwise sweep over nodes [begin, end): reads prev, writes next.
void sweep_block(const GridSpec& grid, const std::vector<LinePlan>& plans, const std::vector<double>& prev,
                 std::vector<double>& next, std::size_t begin, std::size_t end, int iteration, bool track,
                 Scratch& s, BlockResult& out) {
  std::array<std::int64_t, kMaxAxes> idx{};
  unflatten(grid, static_cast<std::int64_t>(begin), idx.data());
  const int d = grid.dim();
  Matrix f(d, d);

  for (std::size_t node = begin; node < end; ++node, advance(grid, idx.data())) {
    const double old = prev[node];
    if (old == kSentinel) {
      next[node] = old;
      continue;
    }
    const double threshold = old - kDecreaseMargin * std::max(1.0, std::abs(old));
    double best = old;
    LaminateRecord best_rec;
    bool improved = false;
    bool have_f = false;

    for (std::size_t di = 0; di < plans.size(); ++di) {
      const LinePlan& plan = plans[di];
      LineRange range;
      if (plan.aligned) {
        range = aligned_range(grid, plan, idx.data());
      } else {
        if (!have_f) {
          for (int a = 0; a < grid.axis_count(); ++a) f(a / d, a % d) = grid.coordinate(a, idx[static_cast<std::size_t>(a)]);
          have_f = true;
        }
        range = line_range(grid, f, plan.step, 1.0);
      }
      if (range.lo == range.hi) continue;
      const auto n = static_cast<std::size_t>(range.hi - range.lo + 1);
      s.ensure(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t l = range.lo + static_cast<std::int64_t>(i);
        s.x[i] = static_cast<double>(l);
        if (l == 0) {
          s.w[i] = old;
        } else if (plan.aligned) {
          s.w[i] = prev[static_cast<std::size_t>(static_cast<std::int64_t>(node) + l * plan.flat_step)];
        } else {
          s.w[i] = interpolate_fast(grid, prev, f + static_cast<double>(l) * plan.step);
        }
      }
      const std::size_t m = convexify_into(s.x.data(), s.w.data(), n, s.y.data(), s.c.data());
      const EnvelopeAtZero e = envelope_value_at_zero(s.y.data(), s.c.data(), m);
      if (e.value < best && e.value < threshold) {
        best = e.value;
        improved = true;
        best_rec.direction = static_cast<std::int32_t>(di);
        best_rec.l_minus = static_cast<std::int32_t>(e.l_minus);
        best_rec.l_plus = static_cast<std::int32_t>(e.l_plus);
        best_rec.lambda = e.lambda;
      }
    }
    next[node] = best;
    if (improved) {
      out.max_decrease = std::max(out.max_decrease, old - best);
      if (track) {
        best_rec.iteration = iteration;
        out.laminates.push_back({static_cast<std::int64_t>(node), best_rec});
      }
    }
  }
}

void check_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.spec == b.spec) || a.values.size() != b.values.size()) {
    throw Error(ErrorCode::SpecMismatch, "fields live on different grids");
  }
}

}  // namespace

ScalarField sample_potential(const GridSpec& grid, const MaterialSpec& spec, const HistoryState& hist,
                             int threads, double invalid_value, bool positive_det_only) {
  spec.validate();
  ScalarField field(grid, 0.0);
  const auto n = static_cast<std::size_t>(grid.node_count());
  const int d = grid.dim();
  parallel_blocks(n, kBlock, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::array<std::int64_t, kMaxAxes> idx{};
    unflatten(grid, static_cast<std::int64_t>(begin), idx.data());
    Matrix f(d, d);
    for (std::size_t node = begin; node < end; ++node, advance(grid, idx.data())) {
      for (int a = 0; a < grid.axis_count(); ++a) f(a / d, a % d) = grid.coordinate(a, idx[static_cast<std::size_t>(a)]);
      if (positive_det_only && !(f.determinant() > 0.0)) {
        field.values[node] = invalid_value;
        continue;
      }
      try {
        field.values[node] = incremental_potential(f, hist, spec);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonPositiveJacobian) throw;
        field.values[node] = invalid_value;
      }
    }
  });
  return field;
}

RelaxationResult relax(const ScalarField& initial, const RelaxationConfig& cfg) {
  if (cfg.directions.empty()) throw Error(ErrorCode::ConfigError, "direction set is empty");
  if (!(cfg.tol > 0.0)) throw Error(ErrorCode::ConfigError, "tol must be positive");
  if (cfg.k_max < 1) throw Error(ErrorCode::ConfigError, "k_max must be at least 1");
  const GridSpec& grid = initial.spec;
  if (grid.axis_count() > kMaxAxes) throw Error(ErrorCode::ConfigError, "grid dimension too large");
  if (initial.values.size() != static_cast<std::size_t>(grid.node_count())) {
    throw Error(ErrorCode::SpecMismatch, "field size does not match its grid");
  }
  double line_step = cfg.line_step;
  if (line_step == 0.0) line_step = grid.uniform_step();
  if (!(line_step > 0.0)) throw Error(ErrorCode::ConfigError, "grid steps differ; set an explicit line step");

  const auto plans = plan_lines(grid, cfg.directions, line_step);
  const auto n = static_cast<std::size_t>(grid.node_count());

  RelaxationResult result;
  result.envelope = initial;
  result.lamination_order.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (initial.values[i] == kSentinel) result.lamination_order[i] = -1;

  std::vector<double> next(n);
  std::vector<std::vector<Pending>> per_iteration;
  const std::size_t blocks = block_count(n, kBlock);
  std::vector<BlockResult> block_results(blocks);
  std::vector<Scratch> scratch(blocks);

  for (int k = 1; k <= cfg.k_max; ++k) {
    for (auto& br : block_results) {
      br.max_decrease = 0.0;
      br.laminates.clear();
    }
    const auto& prev = result.envelope.values;
    parallel_blocks(n, kBlock, cfg.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
      sweep_block(grid, plans, prev, next, begin, end, k, cfg.track_forest, scratch[b], block_results[b]);
    });
    result.envelope.values.swap(next);

    double dec = 0.0;
    std::vector<Pending> merged;
    for (auto& br : block_results) {
      dec = std::max(dec, br.max_decrease);
      if (cfg.track_forest) merged.insert(merged.end(), br.laminates.begin(), br.laminates.end());
    }
    for (std::size_t i = 0; i < n; ++i)
      if (result.envelope.values[i] != next[i]) result.lamination_order[i] = k;
    if (cfg.track_forest) per_iteration.push_back(std::move(merged));

    result.max_decrease.push_back(dec);
    result.iterations = k;
    if (cfg.on_iteration) cfg.on_iteration(k, dec);
    if (dec <= cfg.tol) break;
  }

  if (cfg.track_forest) {
    LaminationForest forest;
    forest.spec = grid;
    forest.line_step = line_step;
    forest.iterations = result.iterations;
    for (const auto& dir : cfg.directions.entries) {
      forest.directions.push_back(dir.r);
      // Normals are defined up to sign; report the one whose first nonzero entry is positive.
      Vector n = dir.b / dir.b.norm();
      for (int i = 0; i < n.size(); ++i) {
        if (n(i) == 0.0) continue;
        if (n(i) < 0.0) n = -n;
        break;
      }
      n.array() += 0.0;  // no negative zeros
      forest.normals.push_back(n);
    }
    forest.offsets.assign(n + 1, 0);
    for (const auto& it : per_iteration)
      for (const auto& p : it) ++forest.offsets[static_cast<std::size_t>(p.node) + 1];
    for (std::size_t i = 0; i < n; ++i) forest.offsets[i + 1] += forest.offsets[i];
    forest.records.resize(static_cast<std::size_t>(forest.offsets[n]));
    std::vector<std::int64_t> fill(forest.offsets.begin(), forest.offsets.end() - 1);
    for (const auto& it : per_iteration)
      for (const auto& p : it) forest.records[static_cast<std::size_t>(fill[static_cast<std::size_t>(p.node)]++)] = p.rec;
    result.forest = std::move(forest);
  }
  return result;
}

double max_decrease(const ScalarField& prev, const ScalarField& next) {
  check_same_grid(prev, next);
  double dec = 0.0;
  for (std::size_t i = 0; i < prev.values.size(); ++i) {
    if (prev.values[i] == kSentinel) continue;
    dec = std::max(dec, prev.values[i] - next.values[i]);
  }
  return dec;
}

ScalarField relative_error(const ScalarField& reference, const ScalarField& candidate, double gamma) {
  check_same_grid(reference, candidate);
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  ScalarField out(reference.spec, 0.0);
  for (std::size_t i = 0; i < reference.values.size(); ++i) {
    const double r = reference.values[i];
    const double c = candidate.values[i];
    if (r == kSentinel || c == kSentinel) {
      out.values[i] = r == c ? 0.0 : kSentinel;
      continue;
    }
    out.values[i] = std::abs(r - c) / (gamma + std::abs(r));
  }
  return out;
}

SliceTable slice(const GridSpec& grid, int row_axis, int col_axis) {
  const int axes = grid.axis_count();
  if (row_axis < 0 || row_axis >= axes || col_axis < 0 || col_axis >= axes || row_axis == col_axis) {
    throw Error(ErrorCode::OutOfDomain, "slice needs two distinct grid axes");
  }
  const int d = grid.dim();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(axes));
  for (int a = 0; a < axes; ++a) {
    const double target = (a / d == a % d) ? 1.0 : 0.0;
    const auto& ax = grid.axis(a);
    const double t = std::round((target - ax.min) / ax.step);
    idx[static_cast<std::size_t>(a)] = std::clamp<std::int64_t>(static_cast<std::int64_t>(t), 0, grid.count(a) - 1);
  }
  SliceTable table;
  table.row_axis = row_axis;
  table.col_axis = col_axis;
  for (std::int64_t i = 0; i < grid.count(row_axis); ++i) table.row_coords.push_back(grid.coordinate(row_axis, i));
  for (std::int64_t j = 0; j < grid.count(col_axis); ++j) table.col_coords.push_back(grid.coordinate(col_axis, j));
  table.nodes.resize(table.row_coords.size());
  for (std::int64_t i = 0; i < grid.count(row_axis); ++i) {
    idx[static_cast<std::size_t>(row_axis)] = i;
    for (std::int64_t j = 0; j < grid.count(col_axis); ++j) {
      idx[static_cast<std::size_t>(col_axis)] = j;
      table.nodes[static_cast<std::size_t>(i)].push_back(grid.flat_index(idx));
    }
  }
  return table;
}

void write_slice_csv(std::ostream& os, const SliceTable& table, const std::vector<double>& values) {
  os << "row\\col";
  for (double c : table.col_coords) os << ", " << format_double(c);
  os << '\n';
  for (std::size_t i = 0; i < table.row_coords.size(); ++i) {
    os << format_double(table.row_coords[i]);
    for (auto node : table.nodes[i]) os << ", " << format_double(values[static_cast<std::size_t>(node)]);
    os << '\n';
  }
}

}  // namespace rankone
