#include <doctest.h>

#include <functional>
#include <sstream>

#include "rankone/config.hpp"
#include "rankone/error.hpp"

using namespace rankone;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("syntax") {
    const Config c = parse(
        "# comment\n"
        "\n"
        "grid.step = 0.15   # trailing\n"
        "  material.model=STVK\n"
        "grid.step = 0.1\n"
        "list = 1, 2 3,4\n"
        "flag = Yes\n");
    CHECK(c.get_double("grid.step") == 0.1);
    CHECK(c.get("material.model") == "STVK");
    CHECK(c.get_list("list") == std::vector<double>{1, 2, 3, 4});
    CHECK(c.get_list("absent").empty());
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_int("absent", 7) == 7);
    CHECK(c.get("absent", "x") == "x");

    CHECK(code_of([] { parse("no equals sign\n"); }) == ErrorCode::ConfigParse);
    CHECK(code_of([] { parse(" = 3\n"); }) == ErrorCode::ConfigParse);
    CHECK(code_of([] { (void)Config::load("/nonexistent/rankone.cfg"); }) == ErrorCode::Io);
  }

  TEST_CASE("typed getters reject garbage") {
    const Config c = parse("a = 1.5x\nb = 2.5\nc = maybe\n");
    CHECK(code_of([&] { (void)c.get_double("a"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { (void)c.get_int("b", 0); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { (void)c.get_bool("c", false); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { (void)c.get("missing"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("material") {
    const MaterialSpec m = material_from(parse("material.model = STVK\nmaterial.dinf = 0.99\nmaterial.d0 = 0.4\n"));
    CHECK(m.model == Model::StVenantKirchhoff);
    CHECK(m.dinf == 0.99);
    CHECK(m.d0 == 0.4);
    CHECK(m.jacobian == Jacobian::Signed);
    CHECK(material_from(parse("material.jacobian = invariant_root\n")).jacobian == Jacobian::InvariantRoot);
    CHECK(code_of([] { (void)material_from(parse("material.dinf = 1.0\n")); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { (void)material_from(parse("material.jacobian = abs\n")); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { (void)history_from(parse("material.beta_k = -1\n"), 2); }) == ErrorCode::ConfigError);
    CHECK(history_from(parse("material.beta_k = 0.06\n"), 2).beta_k == 0.06);
  }

  TEST_CASE("grid") {
    const GridSpec g = grid_from(parse(
        "grid.step = 0.15\ngrid.diag_min = 1.0\ngrid.diag_max = 3.4\n"
        "grid.off_min = -0.15\ngrid.off_max = 0.15\n"));
    CHECK(g.node_count() == 2601);
    const GridSpec h = grid_from(parse("grid.step = 0.5\ngrid.diag_max = 2\ngrid.F12.min = -1\ngrid.F12.max = 1\n"));
    CHECK(h.count(0) == 3);
    CHECK(h.count(1) == 5);
    CHECK(h.count(2) == 1);
    CHECK(code_of([] { (void)grid_from(parse("grid.d = 2\n")); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { (void)grid_from(parse("grid.step = 0.1\ngrid.d = 4\n")); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("direction specs") {
    const GridSpec g = GridSpec::box(2, 0.5, 1.0, -0.5, 0.5, 0.5);
    CHECK(directions_from("reduced:1", g).size() == 16);
    CHECK(directions_from("full", g).kind == DirectionSet::Kind::Full);
    CHECK(directions_from("full", g).radius == 1.0);
    CHECK(code_of([&] { (void)directions_from("reduced:0", g); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { (void)directions_from("reduced:x", g); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { (void)directions_from("all", g); }) == ErrorCode::ConfigError);
  }
}
