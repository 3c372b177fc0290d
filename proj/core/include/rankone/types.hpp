#pragma once

#include <Eigen/Core>

namespace rankone {

/// d x d matrix with d in {1, 2, 3}; storage is inline, never heap allocated.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Fourth-order tangent flattened to (d*d) x (d*d).
/// Entry (i*d + J, k*d + L) holds A_{iJkL} = dP_{iJ} / dF_{kL}.
using Tangent = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 9, 9>;

inline Matrix identity(int d) { return Matrix::Identity(d, d); }

}  // namespace rankone
