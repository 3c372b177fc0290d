#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rankone/error.hpp"
#include "rankone/fesolver.hpp"

using namespace rankone;

namespace {

MaterialSpec nh() { return MaterialSpec{Model::NeoHooke, 0.5, 1.0, 0.3, 0.9, Jacobian::Signed}; }

BvpSpec bvp(BvpKind kind) {
  BvpSpec b;
  b.kind = kind;
  b.kappa = 0.4;
  b.material = nh();
  return b;
}

struct Potentials {
  std::vector<std::unique_ptr<PointPotential>> owned;
  std::vector<const PointPotential*> raw;

  explicit Potentials(const HistoryState& h) {
    for (int qp = 0; qp < TwoElementModel::kQuadPoints; ++qp) {
      owned.push_back(make_material_potential(nh(), h));
      raw.push_back(owned.back().get());
    }
  }
};

}  // namespace

TEST_SUITE("fesolver") {
  TEST_CASE("homogeneous states pass the patch test") {
    const Potentials pot(HistoryState::reference(2));
    for (BvpKind kind : {BvpKind::Uniaxial, BvpKind::Biaxial}) {
      const TwoElementModel m(bvp(kind));
      const double u = 0.2;
      const Eigen::VectorXd disp = m.expand(m.homogeneous(u), u);
      Matrix expected = identity(2);
      expected(0, 0) += u;
      if (kind == BvpKind::Biaxial) expected(1, 1) += u;
      for (const Matrix& f : m.gradients(disp)) CHECK((f - expected).norm() <= 1e-14);

      const Assembly a = m.assemble(disp, pot.raw, false);
      CHECK(m.reduce(a.residual).norm() <= 1e-12);
      const Matrix p = stress_and_tangent(expected, HistoryState::reference(2), nh()).stress;
      CHECK(TwoElementModel::reaction(a) == doctest::Approx(p(0, 0)).epsilon(1e-12));
      CHECK(TwoElementModel::left_reaction(a) == doctest::Approx(-p(0, 0)).epsilon(1e-12));
      CHECK(a.energy == doctest::Approx(incremental_potential(expected, HistoryState::reference(2), nh())));
    }
  }

  TEST_CASE("residual and stiffness are derivatives of the energy") {
    const Potentials pot(HistoryState::with_beta(2, 0.02));
    const TwoElementModel m(bvp(BvpKind::Biaxial));
    Eigen::VectorXd disp(TwoElementModel::kDofs);
    disp << 0.0, 0.0, 0.13, 0.01, 0.31, -0.02, 0.05, 0.22, 0.11, 0.25, 0.27, 0.19;
    const Assembly a = m.assemble(disp, pot.raw, true);
    const double h = 1e-6;
    for (int i = 0; i < TwoElementModel::kDofs; ++i) {
      Eigen::VectorXd p = disp, q = disp;
      p(i) += h;
      q(i) -= h;
      const Assembly ap = m.assemble(p, pot.raw, false);
      const Assembly aq = m.assemble(q, pot.raw, false);
      CHECK(a.residual(i) == doctest::Approx((ap.energy - aq.energy) / (2 * h)).epsilon(1e-6));
      const Eigen::VectorXd col = (ap.residual - aq.residual) / (2 * h);
      CHECK((a.tangent.col(i) - col).norm() <= 1e-5 * std::max(1.0, a.tangent.norm()));
    }
    CHECK((a.tangent - a.tangent.transpose()).norm() <= 1e-12 * a.tangent.norm());
  }

  TEST_CASE("kappa outside (0, 1) is rejected") {
    BvpSpec b = bvp(BvpKind::Uniaxial);
    b.kappa = 1.0;
    CHECK_THROWS_AS(TwoElementModel{b}, Error);
  }

  TEST_CASE("empty load program gives an empty curve") {
    const FdCurve c = solve_newton(bvp(BvpKind::Uniaxial));
    CHECK(c.samples.empty());
    CHECK(c.log.empty());
    std::ostringstream os;
    write_curve_csv(os, c);
    CHECK(os.str() == "u, f\n");
  }

  TEST_CASE("small steps converge quickly to the near-homogeneous state") {
    for (BvpKind kind : {BvpKind::Uniaxial, BvpKind::Biaxial}) {
      BvpSpec b = bvp(kind);
      b.load_steps = {0.0, 0.01, 0.02};
      const FdCurve newton = solve_newton(b);
      REQUIRE(newton.samples.size() == 3);
      CHECK(newton.samples[0].f == doctest::Approx(0.0));
      for (const auto& l : newton.log) CHECK(l.iterations <= 6);

      const FdCurve descent = solve_descent(b);
      REQUIRE(descent.samples.size() == 3);
      for (std::size_t i = 0; i < 3; ++i) {
        // The two elements differ only by epsilon in dinf.
        const double u = b.load_steps[i];
        Matrix f = identity(2);
        f(0, 0) += u;
        if (kind == BvpKind::Biaxial) f(1, 1) += u;
        const double p11 = stress_and_tangent(f, HistoryState::reference(2), nh()).stress(0, 0);
        CHECK(newton.samples[i].f == doctest::Approx(p11).epsilon(1e-4));
        CHECK(descent.samples[i].f == doctest::Approx(newton.samples[i].f).epsilon(1e-5));
      }
      CHECK(newton.first_nonconvex_step == -1);
    }
  }

  TEST_CASE("log and curve output") {
    FdCurve c;
    c.samples = {{0.0, 0.0}, {0.5, 0.25}};
    c.log = {{1, 3, 1e-10}};
    std::ostringstream curve, log;
    write_curve_csv(curve, c);
    write_log_csv(log, c);
    CHECK(curve.str() == "u, f\n0, 0\n0.5, 0.25\n");
    CHECK(log.str().rfind("step, iterations, residual\n1, 3, ", 0) == 0);
  }

  TEST_CASE("line evaluation") {
    const HistoryState h = HistoryState::with_beta(2, 0.06);
    const std::vector<double> s{0.0, 0.3, 0.6};
    const auto plain = line_eval(nh(), h, nullptr, PathKind::Rank2, 2, s);
    REQUIRE(plain.size() == 3);
    CHECK(plain[0].w == doctest::Approx(0.0));
    CHECK(std::isnan(plain[1].w_envelope));
    CHECK(plain[2].w == doctest::Approx(incremental_potential(identity(2) * 1.6, h, nh())));

    const GridSpec g = GridSpec::box(2, 1.0, 1.6, -0.15, 0.15, 0.15);
    MaterialSpec inv = nh();
    inv.jacobian = Jacobian::InvariantRoot;
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 2);
    const RelaxationResult r = relax(sample_potential(g, inv, h), cfg);
    for (const auto& p : line_eval(inv, h, &r.envelope, PathKind::Rank1, 2, s)) CHECK(p.w_envelope <= p.w + 1e-12);
  }

  TEST_CASE("relaxed potential matches the envelope at nodes") {
    RelaxSettings rs;
    rs.grid = GridSpec::box(2, 1.0, 2.2, -0.15, 0.15, 0.15);
    rs.directions = reduced_set(1, 2);
    rs.tol = 1e-12;
    MaterialSpec inv = nh();
    inv.jacobian = Jacobian::InvariantRoot;
    const HistoryState h = HistoryState::with_beta(2, 0.06);
    const auto relaxed = make_relaxed_potential(inv, h, rs);
    const auto plain = make_material_potential(inv, h);
    RelaxationConfig cfg;
    cfg.directions = rs.directions;
    cfg.tol = rs.tol;
    const RelaxationResult r = relax(sample_potential(rs.grid, inv, h), cfg);
    for (std::int64_t n = 0; n < rs.grid.node_count(); n += 5) {
      const Matrix f = rs.grid.point_at(n);
      CHECK(relaxed->energy(f) == doctest::Approx(r.envelope.values[static_cast<std::size_t>(n)]).epsilon(1e-10));
      CHECK(relaxed->energy(f) <= plain->energy(f) + 1e-12);
    }
  }
}
