#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "rankone/directions.hpp"
#include "rankone/engine.hpp"
#include "rankone/grid.hpp"
#include "rankone/material.hpp"

namespace rankone {

enum class BvpKind { Uniaxial, Biaxial };
enum class RelaxPolicy { FixAfterFirstNonconvex, PerStep };
enum class StressMode { Tree, Subdifferential };

/// How the relaxed potential is built and differentiated.
struct RelaxSettings {
  GridSpec grid;
  DirectionSet directions;
  double tol = 1e-4;
  int k_max = 20;  // also the lamination depth
  StressMode stress = StressMode::Tree;
  /// A quadrature point is nonconvex once W(F) exceeds the envelope by this.
  double nonconvex_tol = 1e-8;
  int threads = 1;
};

/// Two bilinear quadrilaterals on the unit square, split at x = kappa. The
/// left element carries dinf, the right one dinf - epsilon. The right edge is
/// pulled to u_x = u; UNIAXIAL keeps u_y = 0 everywhere and ties the two
/// interface nodes, BIAXIAL additionally lifts the top edge to u_y = u.
struct BvpSpec {
  BvpKind kind = BvpKind::Uniaxial;
  double kappa = 0.5;
  double epsilon = 1e-5;
  std::vector<double> load_steps;
  MaterialSpec material;
  bool relaxed = false;
  RelaxPolicy policy = RelaxPolicy::FixAfterFirstNonconvex;
  RelaxSettings relax;
  double solver_tol = 1e-8;
  int max_iterations = 5000;
};

struct FdSample {
  double u;
  double f;
};

struct StepLog {
  int step;
  int iterations;
  double residual;
};

struct FdCurve {
  std::vector<FdSample> samples;
  std::vector<StepLog> log;
  int first_nonconvex_step = -1;  // relaxed runs: step at which envelopes were fixed
};

/// Energy density at one quadrature point: either the material itself with its
/// history, or a relaxed envelope of it.
class PointPotential {
 public:
  virtual ~PointPotential() = default;
  virtual double energy(const Matrix& f) const = 0;
  virtual StressTangentPair response(const Matrix& f, bool tangent) const = 0;
};

struct Assembly {
  double energy = 0.0;
  Eigen::VectorXd residual;  // all 12 nodal dofs
  Eigen::MatrixXd tangent;   // 12 x 12, empty unless requested
};

/// The two-element mesh with its Dirichlet data.
class TwoElementModel {
 public:
  explicit TwoElementModel(const BvpSpec& bvp);

  static constexpr int kNodes = 6;
  static constexpr int kDofs = 12;
  static constexpr int kQuadPoints = 8;

  [[nodiscard]] int free_count() const { return static_cast<int>(free_map_.cols()); }

  /// Full nodal displacement vector for free values q at load u.
  [[nodiscard]] Eigen::VectorXd expand(const Eigen::VectorXd& q, double u) const;
  /// Free values reproducing the homogeneous deformation at load u.
  [[nodiscard]] Eigen::VectorXd homogeneous(double u) const;
  /// Restriction of a full nodal vector / matrix to the free values.
  [[nodiscard]] Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
  [[nodiscard]] Eigen::MatrixXd reduce(const Eigen::MatrixXd& full) const;

  /// Deformation gradients at the quadrature points (element-major).
  [[nodiscard]] std::vector<Matrix> gradients(const Eigen::VectorXd& displacement) const;

  /// Internal forces, total energy and optionally the stiffness, using one
  /// potential per quadrature point.
  [[nodiscard]] Assembly assemble(const Eigen::VectorXd& displacement,
                                  const std::vector<const PointPotential*>& potentials, bool tangent) const;

  /// x-reaction summed over the right edge.
  [[nodiscard]] static double reaction(const Assembly& a);
  /// x-reaction summed over the left edge.
  [[nodiscard]] static double left_reaction(const Assembly& a);

  [[nodiscard]] int element_of(int qp) const { return qp / 4; }

 private:
  BvpSpec bvp_;
  Eigen::Matrix<double, 6, 2> coords_;
  Eigen::MatrixXd free_map_;  // kDofs x free
  Eigen::VectorXd load_map_;  // prescribed displacement per unit load
};

/// Unrelaxed potential: the incremental potential with a given history.
std::unique_ptr<PointPotential> make_material_potential(const MaterialSpec& spec, const HistoryState& hist);

/// Relaxed potential built by running the engine on settings.grid.
std::unique_ptr<PointPotential> make_relaxed_potential(const MaterialSpec& spec, const HistoryState& hist,
                                                       const RelaxSettings& settings);

/// Steepest descent with Armijo backtracking (alpha = 0.5, mu = 0.01).
/// Throws NoConvergence(step, iterations) if a step fails.
FdCurve solve_descent(const BvpSpec& bvp);

/// Newton with the same line search; falls back to a descent step whenever
/// the tangent is singular or does not yield a descent direction.
FdCurve solve_newton(const BvpSpec& bvp);

enum class PathKind { Rank1, Rank2, RankD };

struct PathSample {
  double s;
  double w;
  double w_envelope;  // NaN without an envelope
};

/// W and the interpolated envelope along F_s = I + s M with M = e1 (x) e1
/// (RANK1), diag(1, 1, 0...) (RANK2) or the identity (RANKD).
std::vector<PathSample> line_eval(const MaterialSpec& spec, const HistoryState& hist, const ScalarField* envelope,
                                  PathKind path, int d, const std::vector<double>& s);

void write_curve_csv(std::ostream& os, const FdCurve& curve);
void write_log_csv(std::ostream& os, const FdCurve& curve);

}  // namespace rankone
