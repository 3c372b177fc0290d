#include "rankone/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "rankone/csv.hpp"
#include "rankone/error.hpp"

namespace rankone {

std::int64_t axis_node_count(const AxisSpec& axis) {
  if (!(axis.step > 0.0) || !std::isfinite(axis.step)) {
    throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
  }
  if (!(axis.min <= axis.max)) throw Error(ErrorCode::InvalidArgument, "grid bounds must satisfy min <= max");
  const double ratio = (axis.max - axis.min) / axis.step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw Error(ErrorCode::InvalidArgument,
                "(max - min) / step is not integral: " + std::to_string(ratio));
  }
  return static_cast<std::int64_t>(rounded) + 1;
}

GridSpec::GridSpec(int d, std::vector<AxisSpec> axes) : d_(d), axes_(std::move(axes)) {
  if (d < 1 || d > 3) throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1, 2 or 3");
  if (axes_.size() != static_cast<std::size_t>(d * d)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs d*d axes");
  }
  counts_.resize(axes_.size());
  strides_.resize(axes_.size());
  total_ = 1;
  for (std::size_t a = axes_.size(); a-- > 0;) {
    counts_[a] = axis_node_count(axes_[a]);
    strides_[a] = total_;
    total_ *= counts_[a];
  }
}

GridSpec GridSpec::box(int d, double diag_min, double diag_max, double off_min, double off_max,
                       double step) {
  std::vector<AxisSpec> axes;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      axes.push_back(i == j ? AxisSpec{diag_min, diag_max, step} : AxisSpec{off_min, off_max, step});
  return GridSpec(d, std::move(axes));
}

std::vector<std::int64_t> GridSpec::multi_index(std::int64_t flat) const {
  if (flat < 0 || flat >= total_) throw Error(ErrorCode::IndexOutOfRange, "flat index " + std::to_string(flat));
  std::vector<std::int64_t> m(axes_.size());
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    m[a] = flat / strides_[a];
    flat -= m[a] * strides_[a];
  }
  return m;
}

std::int64_t GridSpec::flat_index(const std::vector<std::int64_t>& multi) const {
  if (multi.size() != axes_.size()) throw Error(ErrorCode::IndexOutOfRange, "multi-index rank mismatch");
  std::int64_t flat = 0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (multi[a] < 0 || multi[a] >= counts_[a]) {
      throw Error(ErrorCode::IndexOutOfRange, "axis " + std::to_string(a) + " index " + std::to_string(multi[a]));
    }
    flat += multi[a] * strides_[a];
  }
  return flat;
}

Matrix GridSpec::point_at(std::int64_t flat) const { return point_at(multi_index(flat)); }

Matrix GridSpec::point_at(const std::vector<std::int64_t>& multi) const {
  (void)flat_index(multi);  // range check
  Matrix f(d_, d_);
  for (int a = 0; a < axis_count(); ++a) f(a / d_, a % d_) = coordinate(a, multi[static_cast<std::size_t>(a)]);
  return f;
}

bool GridSpec::contains(const Matrix& f) const {
  if (f.rows() != d_ || f.cols() != d_) return false;
  for (int a = 0; a < axis_count(); ++a) {
    const auto& ax = axes_[static_cast<std::size_t>(a)];
    const double v = f(a / d_, a % d_);
    const double slack = kNodeTolerance * ax.step;
    if (!(v >= ax.min - slack && v <= ax.max + slack)) return false;
  }
  return true;
}

std::int64_t GridSpec::node_of(const Matrix& f) const {
  if (!contains(f)) return -1;
  const CellLocation loc = locate(*this, f);
  std::int64_t flat = 0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (loc.frac[a] != 0.0) return -1;
    flat += loc.base[a] * strides_[a];
  }
  return flat;
}

double GridSpec::uniform_step() const {
  double step = 0.0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (counts_[a] == 1) continue;
    if (step == 0.0) {
      step = axes_[a].step;
    } else if (axes_[a].step != step) {
      return 0.0;
    }
  }
  return step == 0.0 && !axes_.empty() ? axes_.front().step : step;
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  if (a.d_ != b.d_ || a.axes_.size() != b.axes_.size()) return false;
  for (std::size_t i = 0; i < a.axes_.size(); ++i) {
    if (a.axes_[i].min != b.axes_[i].min || a.axes_[i].max != b.axes_[i].max ||
        a.axes_[i].step != b.axes_[i].step) {
      return false;
    }
  }
  return true;
}

CellLocation locate(const GridSpec& spec, const Matrix& f) {
  const int d = spec.dim();
  if (f.rows() != d || f.cols() != d) throw Error(ErrorCode::OutOfDomain, "matrix size does not match grid");
  CellLocation loc;
  loc.base.resize(static_cast<std::size_t>(spec.axis_count()));
  loc.frac.resize(loc.base.size());
  for (int a = 0; a < spec.axis_count(); ++a) {
    const auto& ax = spec.axis(a);
    const std::int64_t n = spec.count(a);
    const double t = (f(a / d, a % d) - ax.min) / ax.step;
    if (!(t >= -kNodeTolerance && t <= static_cast<double>(n - 1) + kNodeTolerance)) {
      throw Error(ErrorCode::OutOfDomain, "component " + std::to_string(a) + " = " +
                                              std::to_string(f(a / d, a % d)) + " outside [" +
                                              std::to_string(ax.min) + ", " + std::to_string(ax.max) + "]");
    }
    const double r = std::round(t);
    const auto sa = static_cast<std::size_t>(a);
    if (std::abs(t - r) <= kNodeTolerance) {
      loc.base[sa] = std::clamp<std::int64_t>(static_cast<std::int64_t>(r), 0, n - 1);
      loc.frac[sa] = 0.0;
    } else {
      const auto lo = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(t)), 0, n - 2);
      loc.base[sa] = lo;
      loc.frac[sa] = t - static_cast<double>(lo);
    }
  }
  return loc;
}

CellDecomposition decompose(const GridSpec& spec, const Matrix& f) {
  const CellLocation loc = locate(spec, f);
  std::int64_t base = 0;
  std::vector<int> active;
  for (int a = 0; a < spec.axis_count(); ++a) {
    base += loc.base[static_cast<std::size_t>(a)] * spec.stride(a);
    if (loc.frac[static_cast<std::size_t>(a)] != 0.0) active.push_back(a);
  }
  const std::size_t m = active.size();
  CellDecomposition out;
  out.nodes.reserve(std::size_t{1} << m);
  out.weights.reserve(std::size_t{1} << m);
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::int64_t node = base;
    double w = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      // First active axis is the most significant bit, so nodes come out in increasing order.
      const bool upper = (mask >> (m - 1 - j)) & 1U;
      const int a = active[j];
      const double t = loc.frac[static_cast<std::size_t>(a)];
      w *= upper ? t : 1.0 - t;
      if (upper) node += spec.stride(a);
    }
    out.nodes.push_back(node);
    out.weights.push_back(w);
  }
  return out;
}

double interpolate(const ScalarField& field, const Matrix& f) {
  const CellDecomposition cell = decompose(field.spec, f);
  double v = 0.0;
  for (std::size_t i = 0; i < cell.nodes.size(); ++i) {
    const double x = field.values[static_cast<std::size_t>(cell.nodes[i])];
    if (x == kSentinel) return kSentinel;
    v += cell.weights[i] * x;
  }
  return v;
}

void write_field_csv(std::ostream& os, const ScalarField& field, const std::vector<int>& order) {
  const int d = field.spec.dim();
  std::vector<std::string> header{"idx"};
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) header.push_back("F" + std::to_string(i) + std::to_string(j));
  header.emplace_back("value");
  if (!order.empty()) header.emplace_back("lamination_order");
  write_header(os, header);

  const int axes = field.spec.axis_count();
  std::vector<std::int64_t> m(static_cast<std::size_t>(axes), 0);
  for (std::int64_t n = 0; n < field.spec.node_count(); ++n) {
    os << n;
    for (int a = 0; a < axes; ++a) os << ", " << format_double(field.spec.coordinate(a, m[static_cast<std::size_t>(a)]));
    os << ", " << format_double(field.values[static_cast<std::size_t>(n)]);
    if (!order.empty()) os << ", " << order[static_cast<std::size_t>(n)];
    os << '\n';
    for (int a = axes - 1; a >= 0; --a) {
      auto& i = m[static_cast<std::size_t>(a)];
      if (++i < field.spec.count(a)) break;
      i = 0;
    }
  }
}

}  // namespace rankone
