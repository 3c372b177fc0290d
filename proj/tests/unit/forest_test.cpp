#include <doctest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "rankone/engine.hpp"
#include "rankone/error.hpp"
#include "rankone/forest.hpp"

using namespace rankone;

namespace {

Matrix diag(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Two laminates on an 11 x 11 diagonal lattice:
//   (1.3, 1.3) splits along e2 (x) e2 into (1.3, 1.2) [0.8] and (1.3, 1.7) [0.2];
//   (1.3, 1.2) splits along e1 (x) e1 into (1.2, 1.2) [5/6] and (1.8, 1.2) [1/6].
LaminationForest hand_forest() {
  LaminationForest f;
  f.spec = GridSpec::box(2, 1.0, 2.0, 0.0, 0.0, 0.1);
  f.line_step = 0.1;
  f.iterations = 2;
  f.directions = {diag(1, 0), diag(0, 1)};
  Vector n0(2), n1(2);
  n0 << 1, 0;
  n1 << 0, 1;
  f.normals = {n0, n1};
  const std::int64_t a = f.spec.node_of(diag(1.3, 1.2));
  const std::int64_t b = f.spec.node_of(diag(1.3, 1.3));
  REQUIRE(a < b);
  f.offsets.assign(static_cast<std::size_t>(f.spec.node_count()) + 1, 0);
  for (std::int64_t n = 0; n <= f.spec.node_count(); ++n) {
    f.offsets[static_cast<std::size_t>(n)] = (n > a ? 1 : 0) + (n > b ? 1 : 0);
  }
  f.records = {LaminateRecord{1, 0, -1, 5, 1.0 / 6.0}, LaminateRecord{2, 1, -1, 4, 0.2}};
  return f;
}

MaterialSpec nh() { return MaterialSpec{Model::NeoHooke, 0.5, 1.0, 0.3, 0.9, Jacobian::Signed}; }

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("lookup") {
    const LaminationForest f = hand_forest();
    const std::int64_t b = f.spec.node_of(diag(1.3, 1.3));
    CHECK(f.lookup(b, 1) == nullptr);
    REQUIRE(f.lookup(b, 2) != nullptr);
    CHECK(f.lookup(b, 5)->iteration == 2);
    CHECK(f.highest_order(b) == 2);
    CHECK(f.highest_order(0) == 0);
  }

  TEST_CASE("hand-built laminate of second order") {
    const LaminationForest f = hand_forest();
    const LaminationTree t = buildtree(diag(1.3, 1.3), f, 2);
    CHECK(t.branch == LaminationTree::Branch::Lamination);
    CHECK(t.direction == 1);
    const auto hm = extract_hm(t);
    REQUIRE(hm.size() == 3);
    CHECK((hm[0].f - diag(1.2, 1.2)).norm() == doctest::Approx(0.0));
    CHECK(hm[0].xi == doctest::Approx(2.0 / 3.0));
    CHECK((hm[1].f - diag(1.8, 1.2)).norm() == doctest::Approx(0.0));
    CHECK(hm[1].xi == doctest::Approx(2.0 / 15.0));
    CHECK((hm[2].f - diag(1.3, 1.7)).norm() == doctest::Approx(0.0));
    CHECK(hm[2].xi == doctest::Approx(0.2));

    const Microstructure m = microstructure(t, f, nh(), HistoryState::reference(2));
    REQUIRE(m.branchings.size() == 2);
    CHECK(m.branchings[0].normal(0) == 0.0);
    CHECK(m.branchings[0].normal(1) == 1.0);
    CHECK(m.branchings[0].level == 2);
    CHECK(m.branchings[0].lambda == doctest::Approx(0.2));
    CHECK(m.branchings[1].level == 1);
    for (const auto& leaf : m.leaves) {
      const double psi = effective_energy(leaf.f, nh());
      CHECK(leaf.damage == doctest::Approx(damage_value(psi, nh())));
    }

    // Depth 1 sees only the first-order laminate below (1.3, 1.3).
    CHECK(buildtree(diag(1.3, 1.3), f, 1).children.empty());
    CHECK(extract_hm(buildtree(diag(1.3, 1.2), f, 2)).size() == 2);
  }

  TEST_CASE("weighted response matches the memoized evaluation") {
    const LaminationForest f = hand_forest();
    const HistoryState h = HistoryState::with_beta(2, 0.05);
    for (const Matrix& p : {diag(1.3, 1.3), diag(1.33, 1.27), diag(1.3, 1.25), diag(1.5, 1.5)}) {
      const LaminationTree t = buildtree(p, f, 2);
      const StressTangentPair a = eval(t, nh(), h);
      const StressTangentPair b = eval_envelope(p, f, 2, nh(), h);
      CHECK(a.energy == doctest::Approx(b.energy).epsilon(1e-13));
      CHECK((a.stress - b.stress).norm() <= 1e-12);
      CHECK((a.tangent - b.tangent).norm() <= 1e-11);

      // Oracle: explicit sum over the leaves.
      double e = 0.0;
      for (const auto& leaf : extract_hm(t)) e += leaf.xi * stress_and_tangent(leaf.f, h, nh()).energy;
      CHECK(a.energy == doctest::Approx(e).epsilon(1e-13));
    }
  }

  TEST_CASE("interpolation branching") {
    const LaminationForest f = hand_forest();
    const LaminationTree t = buildtree(diag(1.33, 1.27), f, 2);
    CHECK(t.branch == LaminationTree::Branch::Interpolation);
    REQUIRE(t.children.size() == 4);
    const double w[4] = {0.7 * 0.3, 0.7 * 0.7, 0.3 * 0.3, 0.3 * 0.7};
    for (int i = 0; i < 4; ++i) {
      CHECK(t.children[static_cast<std::size_t>(i)].xi == doctest::Approx(w[i]));
      CHECK(t.children[static_cast<std::size_t>(i)].k == 2);
    }
    CHECK(t.children[1].branch == LaminationTree::Branch::Lamination);
    CHECK(t.children[2].branch == LaminationTree::Branch::Leaf);
  }

  TEST_CASE("non rank-one branchings are rejected") {
    LaminationTree t;
    t.f = diag(1.5, 1.5);
    t.branch = LaminationTree::Branch::Lamination;
    LaminationTree a, b;
    a.f = diag(1.0, 1.0);
    a.xi = 0.5;
    b.f = diag(2.0, 2.0);
    b.xi = 0.5;
    t.children = {a, b};
    CHECK_THROWS_AS(extract_hm(t), Error);
  }

  TEST_CASE("errors") {
    LaminationForest empty;
    CHECK_THROWS_AS(buildtree(diag(1.3, 1.3), empty, 2), Error);
    const LaminationForest f = hand_forest();
    CHECK_THROWS_AS(buildtree(diag(3.0, 1.3), f, 2), Error);
    CHECK_THROWS_AS(eval_envelope(diag(3.0, 1.3), f, 2, nh(), HistoryState::reference(2)), Error);
  }

  TEST_CASE("json output") {
    const LaminationForest f = hand_forest();
    const LaminationTree t = buildtree(diag(1.3, 1.3), f, 2);
    std::ostringstream os;
    write_tree_json(os, t, microstructure(t, f, nh(), HistoryState::reference(2)));
    const auto j = nlohmann::json::parse(os.str());
    CHECK(j["leaves"].size() == 3);
    CHECK(j["branchings"].size() == 2);
    CHECK(j["tree"]["children"].size() == 2);
    CHECK(j["tree"]["F"][1][1].get<double>() == doctest::Approx(1.3));
  }

  TEST_CASE("subdifferential stress of an affine field") {
    const GridSpec g = GridSpec::box(2, 1.0, 2.0, -0.2, 0.2, 0.1);
    ScalarField s(g, 0.0);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
      const Matrix p = g.point_at(n);
      s.values[static_cast<std::size_t>(n)] = 2.0 * p(0, 0) - 0.5 * p(0, 1) + 0.25 * p(1, 0) + p(1, 1);
    }
    Matrix q(2, 2);
    q << 1.3, 0.0, 0.1, 1.45;
    const Matrix p = subdifferential_stress(s, q);
    CHECK(p(0, 0) == doctest::Approx(2.0));
    CHECK(p(0, 1) == doctest::Approx(-0.5));
    CHECK(p(1, 0) == doctest::Approx(0.25));
    CHECK(p(1, 1) == doctest::Approx(1.0));

    // A kink with slopes of opposite sign gives zero.
    ScalarField v(g, 0.0);
    for (std::int64_t n = 0; n < g.node_count(); ++n)
      v.values[static_cast<std::size_t>(n)] = std::abs(g.point_at(n)(0, 0) - 1.5);
    CHECK(subdifferential_stress(v, q)(0, 0) == doctest::Approx(-1.0));
    Matrix k = q;
    k(0, 0) = 1.5;
    CHECK(subdifferential_stress(v, k)(0, 0) == 0.0);
  }

  TEST_CASE("forest recorded by the engine reproduces the envelope") {
    const GridSpec g = GridSpec::box(2, 1.0, 2.5, -0.15, 0.15, 0.15);
    const MaterialSpec spec{Model::NeoHooke, 0.5, 1.0, 0.3, 0.9, Jacobian::InvariantRoot};
    const HistoryState h = HistoryState::with_beta(2, 0.06);
    RelaxationConfig cfg;
    cfg.directions = reduced_set(1, 2);
    cfg.track_forest = true;
    cfg.tol = 1e-12;
    const RelaxationResult res = relax(sample_potential(g, spec, h), cfg);
    REQUIRE(res.forest);
    int laminated = 0;
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
      const Matrix p = g.point_at(n);
      const LaminationTree t = buildtree(p, *res.forest, res.iterations);
      if (t.children.empty()) continue;
      ++laminated;
      const auto hm = extract_hm(t);
      double e = 0.0;
      for (const auto& leaf : hm) e += leaf.xi * incremental_potential(leaf.f, h, spec);
      CHECK(e == doctest::Approx(res.envelope.values[static_cast<std::size_t>(n)]).epsilon(1e-10));
    }
    CHECK(laminated > 0);
  }
}
