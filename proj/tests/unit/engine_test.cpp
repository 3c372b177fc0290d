#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "rankone/convexify1d.hpp"
#include "rankone/engine.hpp"
#include "rankone/error.hpp"

using namespace rankone;

namespace {

MaterialSpec nh() { return MaterialSpec{Model::NeoHooke, 0.5, 1.0, 0.3, 0.9, Jacobian::InvariantRoot}; }

GridSpec small_grid() { return GridSpec::box(2, 1.0, 2.5, -0.3, 0.3, 0.15); }

ScalarField small_field() { return sample_potential(small_grid(), nh(), HistoryState::with_beta(2, 0.06)); }

// Every finite node lies on or below every chord through it along each direction.
double worst_violation(const ScalarField& f, const DirectionSet& dirs) {
  const GridSpec& g = f.spec;
  const double delta = g.uniform_step();
  double worst = 0.0;
  for (std::int64_t n = 0; n < g.node_count(); ++n) {
    const double v = f.values[static_cast<std::size_t>(n)];
    if (std::isinf(v)) continue;
    const Matrix p = g.point_at(n);
    for (const Direction& d : dirs.entries) {
      const auto pts = line_points(g, p, d.r, delta);
      LineSamples s;
      for (const auto& lp : pts) {
        s.x.push_back(static_cast<double>(lp.l));
        s.w.push_back(f.values[static_cast<std::size_t>(g.node_of(lp.f))]);
      }
      if (s.x.size() < 2) continue;
      const double env = envelope_value_at_zero(convexify(s)).value;
      worst = std::max(worst, v - env);
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("iterates decrease and stay above the rank-one envelope") {
    const ScalarField w = small_field();
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 2);
    cfg.tol = 1e-12;
    cfg.k_max = 30;

    ScalarField prev = w;
    std::vector<ScalarField> iterates;
    for (int k = 1; k <= 4; ++k) {
      RelaxationConfig one = cfg;
      one.k_max = k;
      iterates.push_back(relax(w, one).envelope);
    }
    for (const auto& it : iterates) {
      for (std::size_t i = 0; i < it.values.size(); ++i) CHECK(it.values[i] <= prev.values[i]);
      prev = it;
    }

    const RelaxationResult res = relax(w, cfg);
    CHECK(res.iterations >= 1);
    CHECK(res.max_decrease.size() == static_cast<std::size_t>(res.iterations));
    CHECK(res.max_decrease.back() <= cfg.tol);
    // Converged iterate is directionally convex on the grid.
    CHECK(worst_violation(res.envelope, cfg.directions) <= 1e-12);
    CHECK(worst_violation(w, cfg.directions) > 1e-3);

    // Convex minorant: a rank-one convex function below W stays below.
    ScalarField affine(w.spec, 0.0);
    for (std::int64_t n = 0; n < w.spec.node_count(); ++n) {
      const Matrix p = w.spec.point_at(n);
      affine.values[static_cast<std::size_t>(n)] = -0.2 + 0.05 * (p(0, 0) + p(1, 1)) - 0.1 * p.trace();
    }
    bool below = true;
    for (std::size_t i = 0; i < w.values.size(); ++i) below = below && affine.values[i] <= w.values[i];
    REQUIRE(below);
    for (std::size_t i = 0; i < w.values.size(); ++i) CHECK(affine.values[i] <= res.envelope.values[i] + 1e-12);
  }

  TEST_CASE("worker count does not change results") {
    const ScalarField w = small_field();
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 2);
    cfg.track_forest = true;
    cfg.threads = 1;
    const RelaxationResult a = relax(w, cfg);
    cfg.threads = 4;
    const RelaxationResult b = relax(w, cfg);
    CHECK(a.envelope.values == b.envelope.values);
    CHECK(a.lamination_order == b.lamination_order);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.forest);
    REQUIRE(b.forest);
    CHECK(a.forest->size() == b.forest->size());
    CHECK(a.forest->offsets == b.forest->offsets);
  }

  TEST_CASE("one-dimensional grids reduce to the convex hull") {
    const GridSpec g({1, {AxisSpec{0.0, 4.0, 1.0}}});
    ScalarField w(g, 0.0);
    w.values = {1, 0, 1, 0, 1};
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 1);
    const RelaxationResult res = relax(w, cfg);
    CHECK(res.envelope.values == std::vector<double>{1, 0, 0, 0, 1});
    CHECK(res.lamination_order == std::vector<int>{0, 0, 1, 0, 0});
  }

  TEST_CASE("sentinels survive and never spread") {
    const GridSpec g({1, {AxisSpec{0.0, 4.0, 1.0}}});
    ScalarField w(g, 0.0);
    w.values = {kSentinel, 2, 3, 0, 1};
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 1);
    const RelaxationResult res = relax(w, cfg);
    CHECK(std::isinf(res.envelope.values[0]));
    CHECK(res.envelope.values[2] == doctest::Approx(1.0));
    CHECK(res.lamination_order[0] == -1);
  }

  TEST_CASE("errors") {
    const ScalarField w = small_field();
    RelaxationConfig cfg;
    CHECK_THROWS_AS(relax(w, cfg), Error);
    ScalarField other(GridSpec::box(2, 1.0, 2.0, 0.0, 0.0, 0.5), 0.0);
    CHECK_THROWS_AS(max_decrease(w, other), Error);
    CHECK_THROWS_AS(relative_error(w, other), Error);
    CHECK_THROWS_AS(slice(w.spec, 0, 0), Error);
    CHECK_THROWS_AS(slice(w.spec, 0, 7), Error);
  }

  TEST_CASE("max decrease and relative error") {
    const GridSpec g({1, {AxisSpec{0.0, 2.0, 1.0}}});
    ScalarField a(g, 0.0), b(g, 0.0);
    a.values = {1.0, kSentinel, 2.0};
    b.values = {0.5, 0.0, 2.5};
    CHECK(max_decrease(a, b) == 0.5);
    const ScalarField e = relative_error(a, b, 1e-12);
    CHECK(e.values[0] == doctest::Approx(0.5));
    CHECK(e.values[2] == doctest::Approx(0.25));
  }

  TEST_CASE("slice through the identity") {
    const GridSpec g = small_grid();
    const SliceTable t = slice(g, 0, 3);
    CHECK(t.row_coords.size() == 11);
    CHECK(t.col_coords.size() == 11);
    const Matrix p = g.point_at(t.nodes[2][3]);
    CHECK(p(0, 0) == doctest::Approx(1.3));
    CHECK(p(1, 1) == doctest::Approx(1.45));
    CHECK(p(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    std::ostringstream os;
    write_slice_csv(os, t, std::vector<double>(static_cast<std::size_t>(g.node_count()), 1.0));
    CHECK(os.str().find('\n') != std::string::npos);
  }

  TEST_CASE("sample_potential marks invalid points") {
    const GridSpec g = GridSpec::box(2, -0.5, 0.5, 0.0, 0.0, 0.5);
    MaterialSpec spec = nh();
    spec.jacobian = Jacobian::Signed;
    const ScalarField w = sample_potential(g, spec, HistoryState::reference(2));
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
      const Matrix p = g.point_at(n);
      CHECK(std::isinf(w.values[static_cast<std::size_t>(n)]) == (p.determinant() <= 0.0));
    }
    spec.model = Model::StVenantKirchhoff;
    const ScalarField s = sample_potential(g, spec, HistoryState::reference(2), 2, 1000.0, true);
    for (std::int64_t n = 0; n < g.node_count(); ++n)
      if (g.point_at(n).determinant() <= 0.0) CHECK(s.values[static_cast<std::size_t>(n)] == 1000.0);
  }
}
