#pragma once

#include <string_view>

#include "rankone/types.hpp"

namespace rankone {

/// Effective strain energy of the virtually undamaged material.
enum class Model { StVenantKirchhoff, NeoHooke };

Model parse_model(std::string_view name);
const char* to_string(Model model) noexcept;

/// How NeoHooke measures volume change. Signed uses J = det F and rejects
/// det F <= 0; InvariantRoot uses J = sqrt(det C) = |det F|, which is finite on
/// both sides of det F = 0. P and A keep their form since d ln|det F| / dF = F^-T.
enum class Jacobian { Signed, InvariantRoot };

/// Damage-model parameters. lambda and mu are Lame constants, d0 the damage
/// saturation parameter, dinf the asymptotic damage limit.
struct MaterialSpec {
  Model model = Model::NeoHooke;
  double lambda = 0.5;
  double mu = 1.0;
  double d0 = 0.3;
  double dinf = 0.9;
  Jacobian jacobian = Jacobian::Signed;

  /// Throws InvalidArgument unless mu > 0, d0 > 0 and 0 < dinf < 1.
  void validate() const;
};

/// Internal state carried between pseudo-time steps.
struct HistoryState {
  double beta_k = 0.0;
  Matrix f_k;

  /// beta_k = 0 and F_k = I.
  static HistoryState reference(int d);
  static HistoryState with_beta(int d, double beta_k);
};

struct StressTangentPair {
  double energy = 0.0;
  Matrix stress;    // first Piola-Kirchhoff
  Tangent tangent;  // nominal moduli, see Tangent for the index layout
};

/// psi0 of the deformation gradient. Two- and one-dimensional gradients are
/// embedded as plane strain (unit diagonal, zero out-of-plane shears), so
/// psi0(I) = 0 in every dimension.
/// Throws NonPositiveJacobian for NeoHooke when J <= 0 (see Jacobian).
double effective_energy(const Matrix& f, const MaterialSpec& spec);

/// psi0 together with dpsi0/dF and d2psi0/dF2, restricted to the d x d block.
StressTangentPair effective_response(const Matrix& f, const MaterialSpec& spec);

/// D(beta) = dinf (1 - exp(-beta / d0)).
double damage_value(double beta, const MaterialSpec& spec);
/// dD/dbeta.
double damage_slope(double beta, const MaterialSpec& spec);
/// Antiderivative of D with the integration constant fixed by Dbar(0) = 0.
double damage_antiderivative(double beta, const MaterialSpec& spec);

/// beta = max(beta_k, psi0(F)).
double updated_beta(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec);

/// Condensed incremental stress potential
///   W = (1-D) psi0(F) - (1-D_k) psi0(F_k) + beta D - beta_k D_k - Dbar(beta) + Dbar(beta_k)
/// with beta = max(beta_k, psi0(F)).
double incremental_potential(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec);

/// W, P = dW/dF and A = d2W/dF2. On the kink psi0(F) = beta_k the evolving
/// branch is used.
StressTangentPair stress_and_tangent(const Matrix& f, const HistoryState& hist,
                                     const MaterialSpec& spec);

/// History after accepting F as the converged state of a step.
HistoryState advance_history(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec);

}  // namespace rankone
