#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"

using namespace rankone;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config small_config() {
  Config c;
  c.set("grid.step", "0.15");
  c.set("grid.diag_min", "1.0");
  c.set("grid.diag_max", "2.2");
  c.set("grid.off_min", "-0.15");
  c.set("grid.off_max", "0.15");
  c.set("material.jacobian", "invariant_root");
  c.set("material.beta_k", "0.06");
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rankone_cli_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int exit_of(const cli::RunConfig& rc, const Config& cfg) {
  try {
    cli::run(rc, cfg);
  } catch (const Error& e) {
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("command names round trip") {
    for (const char* n : {"convexify", "convergence-table", "error-slices", "lamination-matrix", "lines", "tree",
                          "bvp", "scaling"})
      CHECK(std::string(cli::to_string(cli::parse_command(n))) == n);
    CHECK_THROWS_AS(cli::parse_command("plot"), Error);
  }

  TEST_CASE("exit codes") {
    CHECK(cli::exit_code_for(Error(ErrorCode::ConfigParse, "")) == cli::kConfigFailure);
    CHECK(cli::exit_code_for(Error(ErrorCode::ConfigError, "")) == cli::kConfigFailure);
    CHECK(cli::exit_code_for(Error(ErrorCode::Io, "")) == cli::kIoFailure);
    CHECK(cli::exit_code_for(Error(ErrorCode::NoConvergence, "")) == cli::kNumericalFailure);

    TempDir dir("codes");
    cli::RunConfig rc;
    rc.out_dir = dir.path.string();
    rc.command = cli::Command::Convexify;
    CHECK(exit_of(rc, Config{}) == cli::kConfigFailure);  // grid.step missing

    Config bad = small_config();
    bad.set("relax.directions", "diagonal");
    CHECK(exit_of(rc, bad) == cli::kConfigFailure);

    fs::create_directories(dir.path);
    std::ofstream(dir.path / "file") << "x";
    rc.out_dir = (dir.path / "file" / "sub").string();
    CHECK(exit_of(rc, small_config()) == cli::kIoFailure);
  }

  TEST_CASE("empty load program writes a header-only curve") {
    TempDir dir("bvp");
    cli::RunConfig rc;
    rc.command = cli::Command::Bvp;
    rc.out_dir = dir.path.string();
    Config c;
    c.set("bvp.kind", "uniaxial");
    CHECK(exit_of(rc, c) == cli::kOk);
    CHECK(slurp(dir.path / "curve.csv") == "u, f\n");
    CHECK(slurp(dir.path / "log.csv") == "step, iterations, residual\n");

    c.set("bvp.kind", "triaxial");
    CHECK(exit_of(rc, c) == cli::kConfigFailure);
  }

  TEST_CASE("convexify artifacts do not depend on the worker count") {
    TempDir a("t1"), b("t3");
    cli::RunConfig rc;
    rc.command = cli::Command::Convexify;
    rc.overrides.track_forest = true;
    rc.out_dir = a.path.string();
    rc.overrides.threads = 1;
    cli::run(rc, small_config());
    rc.out_dir = b.path.string();
    rc.overrides.threads = 3;
    cli::run(rc, small_config());
    for (const char* f : {"envelope.csv", "directions.csv", "convergence.csv"}) {
      const std::string x = slurp(a.path / f);
      CHECK(!x.empty());
      CHECK(x == slurp(b.path / f));
    }
    CHECK(slurp(a.path / "envelope.csv").rfind("idx, F11, F12, F21, F22, value, lamination_order\n", 0) == 0);
  }

  TEST_CASE("threads must be positive") {
    cli::RunConfig rc;
    rc.overrides.threads = 0;
    CHECK(exit_of(rc, small_config()) == cli::kConfigFailure);
  }
}
