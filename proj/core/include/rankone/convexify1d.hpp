#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rankone/grid.hpp"
#include "rankone/types.hpp"

namespace rankone {

struct LineSamples {
  std::vector<double> x;  // strictly increasing
  std::vector<double> w;  // finite or kSentinel
};

/// Supporting points of the lower convex envelope.
struct HullSupport {
  std::vector<double> y;
  std::vector<double> c;
};

/// Graham scan over sorted samples. Sentinel ordinates are skipped, collinear
/// interior points dropped. `pops`, if given, receives the number of removed
/// stack entries (at most the number of samples).
/// Throws TooFewPoints for fewer than two samples, InvalidArgument when x is
/// not strictly increasing or every ordinate is a sentinel.
HullSupport convexify(const LineSamples& samples, std::size_t* pops = nullptr);

/// Allocation-free core: writes the support into y/c (capacity n) and returns
/// its length. Sentinels are skipped; returns 0 if every ordinate is one.
std::size_t convexify_into(const double* x, const double* w, std::size_t n, double* y, double* c,
                           std::size_t* pops = nullptr) noexcept;

struct EnvelopeAtZero {
  double value = 0.0;
  double l_minus = 0.0;
  double l_plus = 0.0;
  double lambda = 1.0;  // weight of l_plus; lambda l_plus + (1 - lambda) l_minus = 0
};

/// Hull value at l = 0 and its bracketing support abscissae. When 0 is itself
/// a support point, l_minus = l_plus = 0 and lambda = 1.
/// Throws OutOfDomain if the support does not span 0.
EnvelopeAtZero envelope_value_at_zero(const HullSupport& support);
EnvelopeAtZero envelope_value_at_zero(const double* y, const double* c, std::size_t n);

/// Integer range [lo, hi] of l with F + l delta R inside the grid box.
struct LineRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
LineRange line_range(const GridSpec& spec, const Matrix& f, const Matrix& r, double delta);

struct LinePoint {
  std::int64_t l;
  Matrix f;
};

/// Points F + l delta R for every l in line_range. Throws OutOfDomain if f is
/// outside the box.
std::vector<LinePoint> line_points(const GridSpec& spec, const Matrix& f, const Matrix& r, double delta);

}  // namespace rankone
