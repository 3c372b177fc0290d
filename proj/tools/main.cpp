#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "rankone/error.hpp"

int main(int argc, char** argv) {
  using namespace rankone;

  CLI::App app{"Rank-one convexification of incremental damage potentials"};
  app.require_subcommand(1);

  cli::RunConfig rc;
  std::string directions;
  double tol = 0.0;
  int kmax = 0;

  const char* names[] = {"convexify", "convergence-table", "error-slices", "lamination-matrix",
                         "lines",     "tree",              "bvp",          "scaling"};
  for (const char* name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", rc.config_path, "key = value config file");
    sub->add_option("-o,--out", rc.out_dir, "output directory")->capture_default_str();
    sub->add_option("--tol", tol, "stopping tolerance on the max decrease");
    sub->add_option("--kmax", kmax, "maximum number of sweeps");
    sub->add_option("--directions", directions, "reduced:k or full");
    sub->add_flag("--track-forest", rc.overrides.track_forest, "record laminates");
    sub->add_option("--threads", rc.overrides.threads, "worker count")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigFailure;
  }

  for (auto* sub : app.get_subcommands()) {
    rc.command = cli::parse_command(sub->get_name());
    if (sub->count("--tol") != 0) rc.overrides.tol = tol;
    if (sub->count("--kmax") != 0) rc.overrides.k_max = kmax;
    if (sub->count("--directions") != 0) rc.overrides.directions = directions;
  }

  try {
    const Config cfg = rc.config_path.empty() ? Config{} : Config::load(rc.config_path);
    cli::run(rc, cfg);
  } catch (const Error& e) {
    std::cerr << "rankone " << cli::to_string(rc.command) << ": " << e.what() << '\n';
    return cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "rankone " << cli::to_string(rc.command) << ": " << e.what() << '\n';
    return cli::kNumericalFailure;
  }
  return cli::kOk;
}
