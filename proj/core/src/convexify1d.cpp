#include "rankone/convexify1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankone/error.hpp"

namespace rankone {

std::size_t convexify_into(const double* x, const double* w, std::size_t n, double* y, double* c,
                           std::size_t* pops) noexcept {
  std::size_t top = 0;  // number of support points
  std::size_t popped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w[i];
    if (wi == kSentinel) continue;
    const double xi = x[i];
    // Pop while the last support point is not strictly below the chord from
    // its predecessor to (xi, wi); the first point is never removed.
    while (top >= 2 && (c[top - 1] - c[top - 2]) * (xi - y[top - 1]) >= (wi - c[top - 1]) * (y[top - 1] - y[top - 2])) {
      --top;
      ++popped;
    }
    y[top] = xi;
    c[top] = wi;
    ++top;
  }
  if (pops) *pops = popped;
  return top;
}

HullSupport convexify(const LineSamples& samples, std::size_t* pops) {
  const std::size_t n = samples.x.size();
  if (samples.w.size() != n) throw Error(ErrorCode::InvalidArgument, "x and w differ in length");
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "need at least two samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(samples.x[i] > samples.x[i - 1])) throw Error(ErrorCode::InvalidArgument, "x must be strictly increasing");
  }
  HullSupport out;
  out.y.resize(n);
  out.c.resize(n);
  const std::size_t m = convexify_into(samples.x.data(), samples.w.data(), n, out.y.data(), out.c.data(), pops);
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "all samples are sentinels");
  out.y.resize(m);
  out.c.resize(m);
  return out;
}

EnvelopeAtZero envelope_value_at_zero(const double* y, const double* c, std::size_t n) {
  if (n == 0 || y[0] > 0.0 || y[n - 1] < 0.0) throw Error(ErrorCode::OutOfDomain, "support does not span 0");
  // Support lengths are small; a linear scan beats bisection here.
  std::size_t j = 0;
  while (j + 1 < n && y[j + 1] <= 0.0) ++j;
  EnvelopeAtZero e;
  if (y[j] == 0.0) {
    e.value = c[j];
    return e;
  }
  e.l_minus = y[j];
  e.l_plus = y[j + 1];
  e.lambda = -e.l_minus / (e.l_plus - e.l_minus);
  e.value = e.lambda * c[j + 1] + (1.0 - e.lambda) * c[j];
  return e;
}

EnvelopeAtZero envelope_value_at_zero(const HullSupport& support) {
  if (support.y.size() != support.c.size()) throw Error(ErrorCode::InvalidArgument, "y and c differ in length");
  return envelope_value_at_zero(support.y.data(), support.c.data(), support.y.size());
}

LineRange line_range(const GridSpec& spec, const Matrix& f, const Matrix& r, double delta) {
  const int d = spec.dim();
  if (!spec.contains(f)) throw Error(ErrorCode::OutOfDomain, "line base point outside grid");
  if (r.rows() != d || r.cols() != d) throw Error(ErrorCode::InvalidArgument, "direction size does not match grid");
  constexpr auto big = std::numeric_limits<std::int64_t>::max() / 4;
  LineRange range{-big, big};
  for (int a = 0; a < spec.axis_count(); ++a) {
    const double step = delta * r(a / d, a % d);
    if (step == 0.0) continue;
    const auto& ax = spec.axis(a);
    const double fa = f(a / d, a % d);
    // Slack measured in grid steps so that lattice-aligned lines keep their end nodes.
    const double slack = kNodeTolerance * ax.step / std::abs(step);
    const double t_lo = (ax.min - fa) / step;
    const double t_hi = (ax.max - fa) / step;
    const double lo = std::min(t_lo, t_hi);
    const double hi = std::max(t_lo, t_hi);
    range.lo = std::max(range.lo, static_cast<std::int64_t>(std::ceil(lo - slack)));
    range.hi = std::min(range.hi, static_cast<std::int64_t>(std::floor(hi + slack)));
  }
  if (range.lo == -big) range = {0, 0};  // zero direction
  range.lo = std::min<std::int64_t>(range.lo, 0);
  range.hi = std::max<std::int64_t>(range.hi, 0);
  return range;
}

std::vector<LinePoint> line_points(const GridSpec& spec, const Matrix& f, const Matrix& r, double delta) {
  const LineRange range = line_range(spec, f, r, delta);
  std::vector<LinePoint> out;
  out.reserve(static_cast<std::size_t>(range.hi - range.lo + 1));
  for (std::int64_t l = range.lo; l <= range.hi; ++l) {
    out.push_back({l, f + static_cast<double>(l) * delta * r});
  }
  return out;
}

}  // namespace rankone
