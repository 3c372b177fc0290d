#include "rankone/material.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "rankone/error.hpp"

namespace rankone {

namespace {

using Matrix3 = Eigen::Matrix3d;
using Tangent3 = Eigen::Matrix<double, 9, 9>;

Matrix3 embed(const Matrix& f) {
  const auto d = f.rows();
  if (d < 1 || d > 3 || f.cols() != d) {
    throw Error(ErrorCode::InvalidArgument, "deformation gradient must be square with d in {1,2,3}");
  }
  Matrix3 f3 = Matrix3::Identity();
  f3.topLeftCorner(d, d) = f;
  return f3;
}

struct Response3 {
  double energy;
  Matrix3 stress;
  Tangent3 tangent;
};

Response3 neo_hooke(const Matrix3& f, const MaterialSpec& spec, bool with_tangent) {
  const double det = f.determinant();
  const double j = spec.jacobian == Jacobian::InvariantRoot ? std::abs(det) : det;
  if (!(j > 0.0)) {
    throw Error(ErrorCode::NonPositiveJacobian, "det F = " + std::to_string(det));
  }
  const double log_j = std::log(j);
  const double lambda = spec.lambda;
  const double mu = spec.mu;

  Response3 r;
  r.energy = 0.5 * mu * (f.squaredNorm() - 3.0) - mu * log_j + 0.5 * lambda * log_j * log_j;
  const Matrix3 f_inv = f.inverse();
  const Matrix3 f_inv_t = f_inv.transpose();
  const double c = lambda * log_j - mu;
  r.stress = mu * f + c * f_inv_t;
  if (with_tangent) {
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double a = lambda * f_inv(jj, i) * f_inv(l, k) - c * f_inv(jj, k) * f_inv(l, i);
            if (i == k && jj == l) a += mu;
            r.tangent(3 * i + jj, 3 * k + l) = a;
          }
  }
  return r;
}

Response3 st_venant_kirchhoff(const Matrix3& f, const MaterialSpec& spec, bool with_tangent) {
  const double lambda = spec.lambda;
  const double mu = spec.mu;
  const Matrix3 e = 0.5 * (f.transpose() * f - Matrix3::Identity());
  const double tr_e = e.trace();

  Response3 r;
  r.energy = 0.5 * lambda * tr_e * tr_e + mu * (e * e).trace();
  const Matrix3 s = lambda * tr_e * Matrix3::Identity() + 2.0 * mu * e;
  r.stress = f * s;
  if (with_tangent) {
    const Matrix3 b = f * f.transpose();
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double a = lambda * f(i, jj) * f(k, l) + mu * f(i, l) * f(k, jj);
            if (i == k) a += s(jj, l);
            if (jj == l) a += mu * b(i, k);
            r.tangent(3 * i + jj, 3 * k + l) = a;
          }
  }
  return r;
}

Response3 effective3(const Matrix3& f, const MaterialSpec& spec, bool with_tangent) {
  switch (spec.model) {
    case Model::NeoHooke:
      return neo_hooke(f, spec, with_tangent);
    case Model::StVenantKirchhoff:
      return st_venant_kirchhoff(f, spec, with_tangent);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model");
}

StressTangentPair restrict(const Response3& r, int d) {
  StressTangentPair out;
  out.energy = r.energy;
  out.stress = r.stress.topLeftCorner(d, d);
  out.tangent.resize(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int jj = 0; jj < d; ++jj)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          out.tangent(d * i + jj, d * k + l) = r.tangent(3 * i + jj, 3 * k + l);
  return out;
}

}  // namespace

Model parse_model(std::string_view name) {
  if (name == "NEOHOOKE" || name == "neohooke" || name == "NH" || name == "nh") return Model::NeoHooke;
  if (name == "STVK" || name == "stvk" || name == "svk" || name == "SVK") return Model::StVenantKirchhoff;
  throw Error(ErrorCode::ConfigError, "unknown material model '" + std::string(name) + "'");
}

const char* to_string(Model model) noexcept {
  return model == Model::NeoHooke ? "NEOHOOKE" : "STVK";
}

void MaterialSpec::validate() const {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
  if (!(d0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "d0 must be positive");
  if (!(dinf > 0.0 && dinf < 1.0)) throw Error(ErrorCode::InvalidArgument, "dinf must lie in (0, 1)");
  if (!std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be finite");
}

HistoryState HistoryState::reference(int d) { return HistoryState{0.0, identity(d)}; }

HistoryState HistoryState::with_beta(int d, double beta_k) { return HistoryState{beta_k, identity(d)}; }

double effective_energy(const Matrix& f, const MaterialSpec& spec) {
  return effective3(embed(f), spec, false).energy;
}

StressTangentPair effective_response(const Matrix& f, const MaterialSpec& spec) {
  return restrict(effective3(embed(f), spec, true), static_cast<int>(f.rows()));
}

double damage_value(double beta, const MaterialSpec& spec) {
  if (beta < 0.0) throw Error(ErrorCode::InvalidArgument, "beta must be non-negative");
  return -spec.dinf * std::expm1(-beta / spec.d0);
}

double damage_slope(double beta, const MaterialSpec& spec) {
  return spec.dinf / spec.d0 * std::exp(-beta / spec.d0);
}

double damage_antiderivative(double beta, const MaterialSpec& spec) {
  if (beta < 0.0) throw Error(ErrorCode::InvalidArgument, "beta must be non-negative");
  return spec.dinf * (beta + spec.d0 * std::expm1(-beta / spec.d0));
}

double updated_beta(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec) {
  return std::max(hist.beta_k, effective_energy(f, spec));
}

double incremental_potential(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec) {
  const double psi = effective_energy(f, spec);
  const double psi_k = effective_energy(hist.f_k, spec);
  const double beta_k = hist.beta_k;
  const double beta = std::max(beta_k, psi);
  const double dmg = damage_value(beta, spec);
  const double dmg_k = damage_value(beta_k, spec);
  return (1.0 - dmg) * psi - (1.0 - dmg_k) * psi_k + beta * dmg - beta_k * dmg_k -
         damage_antiderivative(beta, spec) + damage_antiderivative(beta_k, spec);
}

StressTangentPair stress_and_tangent(const Matrix& f, const HistoryState& hist,
                                     const MaterialSpec& spec) {
  StressTangentPair eff = effective_response(f, spec);
  const double psi = eff.energy;
  const bool evolving = psi >= hist.beta_k;
  const double beta = evolving ? psi : hist.beta_k;
  const double dmg = damage_value(beta, spec);

  StressTangentPair out;
  out.energy = incremental_potential(f, hist, spec);
  out.stress = (1.0 - dmg) * eff.stress;
  out.tangent = (1.0 - dmg) * eff.tangent;
  if (evolving) {
    // dD/dF = D'(psi0) P0 contributes -D' P0 (x) P0; flatten row-major to
    // match the (i*d + J) tangent layout.
    const auto d = eff.stress.rows();
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 9, 1> p(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index jj = 0; jj < d; ++jj) p(i * d + jj) = eff.stress(i, jj);
    out.tangent -= damage_slope(beta, spec) * p * p.transpose();
  }
  return out;
}

HistoryState advance_history(const Matrix& f, const HistoryState& hist, const MaterialSpec& spec) {
  return HistoryState{updated_beta(f, hist, spec), f};
}

}  // namespace rankone
