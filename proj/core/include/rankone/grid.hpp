#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "rankone/types.hpp"

namespace rankone {

/// Sentinel for lattice points where the potential is undefined.
inline constexpr double kSentinel = std::numeric_limits<double>::infinity();

/// Tolerance, in units of one grid step, below which a coordinate counts as
/// lying on a node.
inline constexpr double kNodeTolerance = 1e-9;

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
};

/// Per-component lattice over d x d matrices. Axis a corresponds to the
/// component (a / d, a % d); flat indices are row-major over the axes, so the
/// last component F_dd varies fastest.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(int d, std::vector<AxisSpec> axes);

  /// Same bounds for all diagonal components, same for all off-diagonal ones.
  static GridSpec box(int d, double diag_min, double diag_max, double off_min, double off_max,
                      double step);

  [[nodiscard]] int dim() const noexcept { return d_; }
  [[nodiscard]] int axis_count() const noexcept { return d_ * d_; }
  [[nodiscard]] const AxisSpec& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  [[nodiscard]] std::int64_t count(int a) const { return counts_[static_cast<std::size_t>(a)]; }
  [[nodiscard]] std::int64_t stride(int a) const { return strides_[static_cast<std::size_t>(a)]; }
  [[nodiscard]] std::int64_t node_count() const noexcept { return total_; }

  [[nodiscard]] double coordinate(int a, std::int64_t i) const {
    return axes_[static_cast<std::size_t>(a)].min + static_cast<double>(i) * axes_[static_cast<std::size_t>(a)].step;
  }

  /// Multi-index of a flat index. Throws IndexOutOfRange.
  [[nodiscard]] std::vector<std::int64_t> multi_index(std::int64_t flat) const;
  /// Throws IndexOutOfRange.
  [[nodiscard]] std::int64_t flat_index(const std::vector<std::int64_t>& multi) const;

  /// Coordinates of a node, synthesized on demand.
  [[nodiscard]] Matrix point_at(std::int64_t flat) const;
  [[nodiscard]] Matrix point_at(const std::vector<std::int64_t>& multi) const;

  /// Componentwise containment with kNodeTolerance slack.
  [[nodiscard]] bool contains(const Matrix& f) const;

  /// Flat index of f if it coincides with a node, otherwise -1.
  [[nodiscard]] std::int64_t node_of(const Matrix& f) const;

  /// Common step of all non-degenerate axes, or 0 if they differ.
  [[nodiscard]] double uniform_step() const;

  friend bool operator==(const GridSpec& a, const GridSpec& b);

 private:
  int d_ = 0;
  std::vector<AxisSpec> axes_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 0;
};

/// Node count of one axis: round((max - min) / step) + 1.
std::int64_t axis_node_count(const AxisSpec& axis);

struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(GridSpec s, double fill) : spec(std::move(s)), values(static_cast<std::size_t>(spec.node_count()), fill) {}
};

/// Enclosing-cell corners (flat indices, increasing) and multilinear weights.
struct CellDecomposition {
  std::vector<std::int64_t> nodes;
  std::vector<double> weights;
};

/// Throws OutOfDomain outside the box.
CellDecomposition decompose(const GridSpec& spec, const Matrix& f);

/// Multilinear interpolation; +infinity if any contributing corner is a
/// sentinel. Throws OutOfDomain.
double interpolate(const ScalarField& field, const Matrix& f);

/// Per-axis location of f: lower node index and fractional offset in [0, 1).
/// An axis with offset 0 is on a node plane.
struct CellLocation {
  std::vector<std::int64_t> base;
  std::vector<double> frac;
};
CellLocation locate(const GridSpec& spec, const Matrix& f);

/// Writes `idx, F11, ..., Fdd, value, lamination_order` rows in node order.
/// `order` may be empty, in which case the column is omitted.
void write_field_csv(std::ostream& os, const ScalarField& field, const std::vector<int>& order);

}  // namespace rankone
