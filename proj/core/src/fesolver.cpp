#include "rankone/fesolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "rankone/csv.hpp"
#include "rankone/error.hpp"
#include "rankone/forest.hpp"

namespace rankone {

namespace {

constexpr double kArmijoAlpha = 0.5;
constexpr double kArmijoMu = 0.01;
constexpr int kMaxBacktracks = 60;
// Gradient sampling radii (displacement units) for relaxed runs.
constexpr double kInitialRadius = 1e-4;
constexpr double kMinRadius = 1e-8;
constexpr double kRadiusShrink = 0.1;

// Local node order of the reference square.
constexpr double kXi[4] = {-1.0, 1.0, 1.0, -1.0};
constexpr double kEta[4] = {-1.0, -1.0, 1.0, 1.0};
constexpr int kConnectivity[2][4] = {{0, 1, 4, 3}, {1, 2, 5, 4}};

struct QuadData {
  double weight;                // Gauss weight times det J
  Eigen::Matrix<double, 4, 2> grad;  // dN_a / dX_J
};

class MaterialPotential final : public PointPotential {
 public:
  MaterialPotential(const MaterialSpec& spec, const HistoryState& hist) : spec_(spec), hist_(hist) {}
  double energy(const Matrix& f) const override { return incremental_potential(f, hist_, spec_); }
  StressTangentPair response(const Matrix& f, bool) const override { return stress_and_tangent(f, hist_, spec_); }

 private:
  MaterialSpec spec_;
  HistoryState hist_;
};

class RelaxedPotential final : public PointPotential {
 public:
  RelaxedPotential(const MaterialSpec& spec, const HistoryState& hist, const RelaxSettings& settings)
      : spec_(spec), hist_(hist), mode_(settings.stress) {
    RelaxationConfig cfg;
    cfg.tol = settings.tol;
    cfg.k_max = settings.k_max;
    cfg.directions = settings.directions;
    cfg.track_forest = settings.stress == StressMode::Tree;
    cfg.threads = settings.threads;
    result_ = relax(sample_potential(settings.grid, spec, hist, settings.threads), cfg);
  }

  double energy(const Matrix& f) const override { return interpolate(result_.envelope, f); }

  StressTangentPair response(const Matrix& f, bool) const override {
    StressTangentPair out;
    if (mode_ == StressMode::Tree) {
      out = eval_envelope(f, *result_.forest, result_.iterations, spec_, hist_);
    } else {
      const auto d = f.rows();
      out.stress = subdifferential_stress(result_.envelope, f);
      out.tangent = Tangent::Zero(d * d, d * d);
    }
    out.energy = interpolate(result_.envelope, f);
    return out;
  }

 private:
  MaterialSpec spec_;
  HistoryState hist_;
  StressMode mode_;
  RelaxationResult result_;
};

std::vector<QuadData> quadrature(const Eigen::Matrix<double, 6, 2>& coords) {
  const double g = 1.0 / std::sqrt(3.0);
  std::vector<QuadData> out;
  for (const auto& conn : kConnectivity) {
    const double hx = coords(conn[1], 0) - coords(conn[0], 0);
    const double hy = coords(conn[3], 1) - coords(conn[0], 1);
    for (int q = 0; q < 4; ++q) {
      const double xi = kXi[q] * g;
      const double eta = kEta[q] * g;
      QuadData d;
      d.weight = hx * hy / 4.0;
      for (int a = 0; a < 4; ++a) {
        d.grad(a, 0) = kXi[a] * (1.0 + eta * kEta[a]) / 4.0 * 2.0 / hx;
        d.grad(a, 1) = kEta[a] * (1.0 + xi * kXi[a]) / 4.0 * 2.0 / hy;
      }
      out.push_back(d);
    }
  }
  return out;
}

bool is_domain_error(const Error& e) {
  return e.code() == ErrorCode::OutOfDomain || e.code() == ErrorCode::NonPositiveJacobian;
}

}  // namespace

TwoElementModel::TwoElementModel(const BvpSpec& bvp) : bvp_(bvp) {
  if (!(bvp.kappa > 0.0 && bvp.kappa < 1.0)) throw Error(ErrorCode::InvalidArgument, "kappa must lie in (0, 1)");
  coords_ << 0.0, 0.0, bvp.kappa, 0.0, 1.0, 0.0, 0.0, 1.0, bvp.kappa, 1.0, 1.0, 1.0;
  load_map_ = Eigen::VectorXd::Zero(kDofs);
  load_map_(2 * 2) = 1.0;
  load_map_(2 * 5) = 1.0;
  if (bvp.kind == BvpKind::Uniaxial) {
    free_map_ = Eigen::MatrixXd::Zero(kDofs, 1);
    free_map_(2 * 1, 0) = 1.0;
    free_map_(2 * 4, 0) = 1.0;
  } else {
    for (int n : {3, 4, 5}) load_map_(2 * n + 1) = 1.0;
    free_map_ = Eigen::MatrixXd::Zero(kDofs, 2);
    free_map_(2 * 1, 0) = 1.0;
    free_map_(2 * 4, 1) = 1.0;
  }
}

Eigen::VectorXd TwoElementModel::expand(const Eigen::VectorXd& q, double u) const {
  return free_map_ * q + u * load_map_;
}

Eigen::VectorXd TwoElementModel::homogeneous(double u) const {
  return Eigen::VectorXd::Constant(free_count(), u * bvp_.kappa);
}

Eigen::VectorXd TwoElementModel::reduce(const Eigen::VectorXd& full) const { return free_map_.transpose() * full; }

Eigen::MatrixXd TwoElementModel::reduce(const Eigen::MatrixXd& full) const {
  return free_map_.transpose() * full * free_map_;
}

std::vector<Matrix> TwoElementModel::gradients(const Eigen::VectorXd& displacement) const {
  const auto qd = quadrature(coords_);
  std::vector<Matrix> out;
  for (int qp = 0; qp < kQuadPoints; ++qp) {
    const auto& conn = kConnectivity[qp / 4];
    Matrix f = identity(2);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) f(i, j) += displacement(2 * conn[a] + i) * qd[static_cast<std::size_t>(qp)].grad(a, j);
    out.push_back(f);
  }
  return out;
}

Assembly TwoElementModel::assemble(const Eigen::VectorXd& displacement,
                                   const std::vector<const PointPotential*>& potentials, bool tangent) const {
  const auto qd = quadrature(coords_);
  const auto fs = gradients(displacement);
  Assembly out;
  out.residual = Eigen::VectorXd::Zero(kDofs);
  if (tangent) out.tangent = Eigen::MatrixXd::Zero(kDofs, kDofs);
  for (int qp = 0; qp < kQuadPoints; ++qp) {
    const auto& conn = kConnectivity[qp / 4];
    const auto& q = qd[static_cast<std::size_t>(qp)];
    const StressTangentPair st = potentials[static_cast<std::size_t>(qp)]->response(fs[static_cast<std::size_t>(qp)], tangent);
    out.energy += q.weight * st.energy;
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 2; ++i) {
        double r = 0.0;
        for (int j = 0; j < 2; ++j) r += st.stress(i, j) * q.grad(a, j);
        out.residual(2 * conn[a] + i) += q.weight * r;
        if (!tangent) continue;
        for (int b = 0; b < 4; ++b)
          for (int k = 0; k < 2; ++k) {
            double kk = 0.0;
            for (int j = 0; j < 2; ++j)
              for (int l = 0; l < 2; ++l) kk += q.grad(a, j) * st.tangent(2 * i + j, 2 * k + l) * q.grad(b, l);
            out.tangent(2 * conn[a] + i, 2 * conn[b] + k) += q.weight * kk;
          }
      }
  }
  return out;
}

double TwoElementModel::reaction(const Assembly& a) { return a.residual(2 * 2) + a.residual(2 * 5); }

double TwoElementModel::left_reaction(const Assembly& a) { return a.residual(2 * 0) + a.residual(2 * 3); }

std::unique_ptr<PointPotential> make_material_potential(const MaterialSpec& spec, const HistoryState& hist) {
  return std::make_unique<MaterialPotential>(spec, hist);
}

std::unique_ptr<PointPotential> make_relaxed_potential(const MaterialSpec& spec, const HistoryState& hist,
                                                       const RelaxSettings& settings) {
  return std::make_unique<RelaxedPotential>(spec, hist, settings);
}

namespace {

struct CachedPotential {
  int element;
  bool relaxed;
  HistoryState hist;
  std::shared_ptr<PointPotential> potential;
};

bool same_history(const HistoryState& a, const HistoryState& b) {
  return a.beta_k == b.beta_k && a.f_k == b.f_k;
}

class Driver {
 public:
  Driver(const BvpSpec& bvp, bool newton) : bvp_(bvp), model_(bvp), newton_(newton) {
    bvp_.material.validate();
    specs_[0] = bvp.material;
    specs_[1] = bvp.material;
    specs_[1].dinf = bvp.material.dinf - bvp.epsilon;
    hist_.assign(TwoElementModel::kQuadPoints, HistoryState::reference(2));
    potentials_.resize(TwoElementModel::kQuadPoints);
  }

  // FixAfterFirstNonconvex runs the unrelaxed material until a converged state
  // leaves the convex regime, re-solves that step on the envelopes and keeps
  // them (and the history) fixed from then on. PerStep relaxes every step.
  FdCurve run() {
    FdCurve curve;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model_.free_count());
    double u_prev = 0.0;
    bool frozen = false;
    const bool per_step = bvp_.relaxed && bvp_.policy == RelaxPolicy::PerStep;
    const bool fix_later = bvp_.relaxed && bvp_.policy == RelaxPolicy::FixAfterFirstNonconvex;
    for (std::size_t s = 0; s < bvp_.load_steps.size(); ++s) {
      const int step = static_cast<int>(s);
      const double u = bvp_.load_steps[s];
      q += model_.homogeneous(u) - model_.homogeneous(u_prev);
      u_prev = u;
      if (!frozen) refresh_potentials(per_step);
      relaxed_active_ = per_step || frozen;

      // A relaxed run whose unrelaxed solve breaks down has left the convex
      // regime as well; restart that step from the predictor.
      const Eigen::VectorXd predictor = q;
      StepLog log{step, 0, 0.0};
      bool onset = false;
      try {
        log = solve_step(q, u, step);
        onset = fix_later && !frozen && nonconvex(q, u);
      } catch (const Error& err) {
        if (!fix_later || frozen || err.code() != ErrorCode::NoConvergence) throw;
        q = predictor;
        onset = true;
      }
      if (onset) {
        frozen = true;
        curve.first_nonconvex_step = step;
        refresh_potentials(true);
        relaxed_active_ = true;
        const StepLog again = solve_step(q, u, step);
        log.iterations += again.iterations;
        log.residual = again.residual;
      }
      curve.log.push_back(log);
      curve.samples.push_back({u, reaction_});

      if (!frozen) {
        const auto fs = model_.gradients(model_.expand(q, u));
        for (int qp = 0; qp < TwoElementModel::kQuadPoints; ++qp) {
          const auto sq = static_cast<std::size_t>(qp);
          hist_[sq] = advance_history(fs[sq], hist_[sq], specs_[model_.element_of(qp)]);
        }
      }
    }
    return curve;
  }

 private:
  std::vector<const PointPotential*> raw() const {
    std::vector<const PointPotential*> out;
    for (const auto& p : potentials_) out.push_back(p.get());
    return out;
  }

  std::shared_ptr<PointPotential> potential_for(int e, const HistoryState& h, bool relaxed) {
    for (const auto& c : cache_)
      if (c.element == e && c.relaxed == relaxed && same_history(c.hist, h)) return c.potential;
    std::shared_ptr<PointPotential> p =
        relaxed ? std::shared_ptr<PointPotential>(make_relaxed_potential(specs_[e], h, bvp_.relax))
                : std::shared_ptr<PointPotential>(make_material_potential(specs_[e], h));
    cache_.push_back({e, relaxed, h, p});
    return p;
  }

  void refresh_potentials(bool relaxed) {
    for (int qp = 0; qp < TwoElementModel::kQuadPoints; ++qp) {
      const auto sq = static_cast<std::size_t>(qp);
      potentials_[sq] = potential_for(model_.element_of(qp), hist_[sq], relaxed);
    }
    // Only the current histories can be requested again.
    std::erase_if(cache_, [&](const CachedPotential& c) {
      return !same_history(c.hist, hist_[0]) && std::none_of(hist_.begin(), hist_.end(), [&](const HistoryState& h) {
        return same_history(c.hist, h);
      });
    });
  }

  // True if W exceeds its envelope (built from the current history) somewhere.
  bool nonconvex(const Eigen::VectorXd& q, double u) {
    const auto fs = model_.gradients(model_.expand(q, u));
    for (int qp = 0; qp < TwoElementModel::kQuadPoints; ++qp) {
      const auto sq = static_cast<std::size_t>(qp);
      const int e = model_.element_of(qp);
      const double w = incremental_potential(fs[sq], hist_[sq], specs_[e]);
      double env = 0.0;
      try {
        env = potential_for(e, hist_[sq], true)->energy(fs[sq]);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::OutOfDomain) throw;
        throw Error(ErrorCode::NoConvergence, "deformation left the relaxation grid: " + std::string(err.what()));
      }
      if (w > env + bvp_.relax.nonconvex_tol) return true;
    }
    return false;
  }

  // Energy of a trial state, +infinity outside the admissible domain.
  double trial_energy(const Eigen::VectorXd& q, double u) const {
    try {
      return model_.assemble(model_.expand(q, u), raw(), false).energy;
    } catch (const Error& err) {
      if (is_domain_error(err)) return std::numeric_limits<double>::infinity();
      throw;
    }
  }

  double trial_residual(const Eigen::VectorXd& q, double u) const {
    try {
      return model_.reduce(model_.assemble(model_.expand(q, u), raw(), false).residual).norm();
    } catch (const Error& err) {
      if (is_domain_error(err)) return std::numeric_limits<double>::infinity();
      throw;
    }
  }

  struct Sample {
    Eigen::VectorXd r;
    double reaction;
  };

  // Residual and reaction at q plus, for relaxed runs, at q +- h e_j. The
  // relaxed energy is piecewise multilinear; samples straddling a kink of it
  // expose the nearby one-sided gradients.
  std::vector<Sample> samples(const Eigen::VectorXd& q, double u, const Assembly& a, double h) const {
    std::vector<Sample> out{{model_.reduce(a.residual), TwoElementModel::reaction(a)}};
    if (!relaxed_active_) return out;
    for (int j = 0; j < q.size(); ++j)
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd qs = q;
        qs(j) += sgn * h;
        try {
          const Assembly as = model_.assemble(model_.expand(qs, u), raw(), false);
          out.push_back({model_.reduce(as.residual), TwoElementModel::reaction(as)});
        } catch (const Error& err) {
          if (!is_domain_error(err)) throw;
        }
      }
    return out;
  }

  // Weights of the shortest vector in the convex hull of the sampled
  // residuals. Brute force over supports of at most n + 1 samples; n <= 2.
  static std::vector<double> min_norm_weights(const std::vector<Sample>& pts) {
    const auto m = pts.size();
    const auto n = static_cast<std::size_t>(pts.front().r.size());
    std::vector<double> best(m, 0.0);
    best[0] = 1.0;
    double best_norm = pts[0].r.squaredNorm();
    for (unsigned mask = 1; mask < (1U << m); ++mask) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < m; ++i)
        if ((mask >> i) & 1U) idx.push_back(i);
      if (idx.size() < 2 || idx.size() > n + 1) continue;
      const auto k = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j)
          kkt(i, j) = pts[idx[static_cast<std::size_t>(i)]].r.dot(pts[idx[static_cast<std::size_t>(j)]].r);
        kkt(i, k) = 1.0;
        kkt(k, i) = 1.0;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs(k) = 1.0;
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (sol.head(k).minCoeff() < 0.0) continue;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < k; ++i) g += sol(i) * pts[idx[static_cast<std::size_t>(i)]].r;
      if (g.squaredNorm() < best_norm) {
        best_norm = g.squaredNorm();
        std::fill(best.begin(), best.end(), 0.0);
        for (Eigen::Index i = 0; i < k; ++i) best[idx[static_cast<std::size_t>(i)]] = sol(i);
      }
    }
    return best;
  }

  // Unrelaxed runs stop once the residual is small. Relaxed runs minimize the
  // piecewise multilinear energy by gradient sampling: the shortest element g
  // of the sampled hull is the search direction and stationarity measure, and
  // its weights give the reaction. The sampling radius shrinks to kMinRadius
  // whenever g is small or no Armijo step exists.
  StepLog solve_step(Eigen::VectorXd& q, double u, int step) {
    double gnorm = 0.0;
    double h = kInitialRadius;
    Eigen::VectorXd q_prev;
    Eigen::VectorXd g_prev;
    double t_last = 1.0;
    bool grow = false;
    for (int it = 0; it <= bvp_.max_iterations; ++it) {
      Assembly a;
      try {
        a = model_.assemble(model_.expand(q, u), raw(), newton_);
      } catch (const Error& err) {
        if (!is_domain_error(err)) throw;
        throw Error(ErrorCode::NoConvergence, "step " + std::to_string(step) + ": " + err.what());
      }
      const std::vector<Sample> pts = samples(q, u, a, h);
      const std::vector<double> w = min_norm_weights(pts);
      Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
      reaction_ = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        g += w[i] * pts[i].r;
        reaction_ += w[i] * pts[i].reaction;
      }
      gnorm = g.norm();
      const bool resolved = !relaxed_active_ || h <= kMinRadius;
      if (gnorm <= bvp_.solver_tol * std::max(1.0, std::abs(reaction_))) {
        if (resolved) return {step, it, gnorm};
        h = std::max(kMinRadius, h * kRadiusShrink);
        continue;
      }
      if (it == bvp_.max_iterations) break;

      // Descent steps start from the Barzilai-Borwein length; without usable
      // curvature a step that was accepted untouched is doubled.
      Eigen::VectorXd dq = -g;
      double t0 = 1.0;
      if (q_prev.size() > 0) {
        const Eigen::VectorXd sq = q - q_prev;
        const double sy = sq.dot(g - g_prev);
        if (sy > 0.0) {
          t0 = std::clamp(sq.squaredNorm() / sy, 1e-8, 1e8);
          if (grow) t0 = std::max(t0, 2.0 * t_last);
        } else {
          t0 = grow ? 2.0 * t_last : t_last;
        }
      }
      if (newton_) {
        const Eigen::MatrixXd k = model_.reduce(a.tangent);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          const Eigen::VectorXd nd = ldlt.solve(-pts.front().r);
          if (nd.allFinite() && nd.dot(g) < 0.0) {
            dq = nd;
            t0 = 1.0;
          }
        }
      }
      const Eigen::VectorXd q_old = q;
      const double t = line_search(q, u, dq, g, a.energy, t0);
      if (t == 0.0) {
        if (!relaxed_active_)
          throw Error(ErrorCode::NoConvergence,
                      "step " + std::to_string(step) + " stalled after " + std::to_string(it) + " iterations");
        // Stationary at the current radius.
        if (h <= kMinRadius) return {step, it, gnorm};
        h = std::max(kMinRadius, h * kRadiusShrink);
        continue;
      }
      q_prev = q_old;
      g_prev = g;
      grow = t == t0;
      t_last = t;
    }
    throw Error(ErrorCode::NoConvergence, "step " + std::to_string(step) + " reached " +
                                              std::to_string(bvp_.max_iterations) + " iterations, residual " +
                                              format_double(gnorm));
  }

  // Armijo backtracking on the energy from t0 by kArmijoAlpha; returns the
  // accepted length or 0. Unrelaxed runs fall back to a sufficient decrease of
  // the residual norm (steps near the kink psi0 = beta_k).
  double line_search(Eigen::VectorXd& q, double u, const Eigen::VectorXd& dq, const Eigen::VectorXd& g, double energy,
                     double t0) {
    const double slope = g.dot(dq);
    // Below this the predicted decrease is lost in the rounding of the energy.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(energy));
    double t = t0;
    for (int j = 0; j < kMaxBacktracks && -kArmijoMu * t * slope > noise; ++j, t *= kArmijoAlpha) {
      const Eigen::VectorXd trial = q + t * dq;
      if (trial_energy(trial, u) <= energy + kArmijoMu * t * slope) {
        q = trial;
        return t;
      }
    }
    if (relaxed_active_) return 0.0;
    const double rn = g.norm();
    t = std::min(t0, 1.0);
    for (int j = 0; j < kMaxBacktracks; ++j, t *= kArmijoAlpha) {
      const Eigen::VectorXd trial = q + t * dq;
      if (trial_residual(trial, u) <= (1.0 - kArmijoMu * t) * rn) {
        q = trial;
        return t;
      }
    }
    return 0.0;
  }

  BvpSpec bvp_;
  TwoElementModel model_;
  bool newton_;
  bool relaxed_active_ = false;
  double reaction_ = 0.0;  // of the last solved step
  MaterialSpec specs_[2];
  std::vector<HistoryState> hist_;
  std::vector<std::shared_ptr<PointPotential>> potentials_;
  std::vector<CachedPotential> cache_;
};

}  // namespace

FdCurve solve_descent(const BvpSpec& bvp) { return Driver(bvp, false).run(); }

FdCurve solve_newton(const BvpSpec& bvp) { return Driver(bvp, true).run(); }

std::vector<PathSample> line_eval(const MaterialSpec& spec, const HistoryState& hist, const ScalarField* envelope,
                                  PathKind path, int d, const std::vector<double>& s) {
  Matrix m = Matrix::Zero(d, d);
  switch (path) {
    case PathKind::Rank1: m(0, 0) = 1.0; break;
    case PathKind::Rank2:
      for (int i = 0; i < std::min(d, 2); ++i) m(i, i) = 1.0;
      break;
    case PathKind::RankD: m = identity(d); break;
  }
  std::vector<PathSample> out;
  for (double si : s) {
    const Matrix f = identity(d) + si * m;
    PathSample p{si, incremental_potential(f, hist, spec), std::numeric_limits<double>::quiet_NaN()};
    if (envelope) p.w_envelope = interpolate(*envelope, f);
    out.push_back(p);
  }
  return out;
}

void write_curve_csv(std::ostream& os, const FdCurve& curve) {
  write_header(os, {"u", "f"});
  for (const auto& s : curve.samples) write_row(os, {s.u, s.f});
}

void write_log_csv(std::ostream& os, const FdCurve& curve) {
  write_header(os, {"step", "iterations", "residual"});
  for (const auto& l : curve.log) os << l.step << ", " << l.iterations << ", " << format_double(l.residual) << '\n';
}

}  // namespace rankone
