#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "rankone/csv.hpp"
#include "rankone/engine.hpp"
#include "rankone/fesolver.hpp"
#include "rankone/forest.hpp"

namespace rankone::cli {

namespace {

struct Setup {
  MaterialSpec material;
  HistoryState hist;
  GridSpec grid;
  RelaxationConfig relax;
  double invalid_value = kSentinel;
  bool positive_det_only = false;
};

double parse_value(const Config& cfg, const std::string& key, double fallback) {
  const std::string v = cfg.get(key, "");
  if (v.empty()) return fallback;
  if (v == "inf" || v == "+inf") return kSentinel;
  return cfg.get_double(key);
}

RelaxationConfig relax_config(const Config& cfg, const Overrides& ov, const GridSpec& grid) {
  RelaxationConfig rc;
  rc.tol = ov.tol.value_or(cfg.get_double("relax.tol", rc.tol));
  rc.k_max = ov.k_max.value_or(cfg.get_int("relax.k_max", rc.k_max));
  rc.directions = directions_from(ov.directions.value_or(cfg.get("relax.directions", "reduced:1")), grid);
  rc.track_forest = ov.track_forest || cfg.get_bool("relax.track_forest", false);
  rc.threads = ov.threads;
  rc.line_step = cfg.get_double("relax.line_step", 0.0);
  return rc;
}

Setup setup(const Config& cfg, const Overrides& ov) {
  Setup s;
  s.material = material_from(cfg);
  s.grid = grid_from(cfg);
  s.hist = history_from(cfg, s.grid.dim());
  s.relax = relax_config(cfg, ov, s.grid);
  s.invalid_value = parse_value(cfg, "relax.invalid_value", kSentinel);
  s.positive_det_only = cfg.get_bool("relax.positive_det_only", false);
  return s;
}

ScalarField initial_field(const Setup& s) {
  return sample_potential(s.grid, s.material, s.hist, s.relax.threads, s.invalid_value, s.positive_det_only);
}

RelaxationResult run_relax(const Setup& s) {
  RelaxationConfig rc = s.relax;
  rc.on_iteration = [](int k, double dec) {
    std::cerr << "  sweep " << k << ": max decrease " << format_double(dec) << '\n';
  };
  return relax(initial_field(s), rc);
}

std::ofstream open_out(const RunConfig& rc, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(rc.out_dir, ec);
  const auto path = std::filesystem::path(rc.out_dir) / name;
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return os;
}

void finish(std::ofstream& os, const std::string& name) {
  os.flush();
  if (!os) throw Error(ErrorCode::Io, "write failed for '" + name + "'");
}

void write_convergence(const RunConfig& rc, const RelaxationResult& r) {
  auto os = open_out(rc, "convergence.csv");
  write_header(os, {"k", "max_decrease"});
  for (std::size_t k = 0; k < r.max_decrease.size(); ++k) os << k + 1 << ", " << format_double(r.max_decrease[k]) << '\n';
  finish(os, "convergence.csv");
}

std::string axis_name(const GridSpec& g, int a) {
  return "F" + std::to_string(a / g.dim() + 1) + std::to_string(a % g.dim() + 1);
}

// Pairs of non-degenerate axes to slice; config "slices.axes = 0 3, 1 2" picks explicit ones.
std::vector<std::pair<int, int>> slice_pairs(const Config& cfg, const GridSpec& g) {
  std::vector<std::pair<int, int>> out;
  const auto listed = cfg.get_list("slices.axes");
  if (!listed.empty()) {
    if (listed.size() % 2 != 0) throw Error(ErrorCode::ConfigError, "slices.axes needs pairs of axis indices");
    for (std::size_t i = 0; i < listed.size(); i += 2)
      out.emplace_back(static_cast<int>(listed[i]), static_cast<int>(listed[i + 1]));
    return out;
  }
  for (int a = 0; a < g.axis_count(); ++a)
    for (int b = a + 1; b < g.axis_count(); ++b)
      if (g.count(a) > 1 && g.count(b) > 1) out.emplace_back(a, b);
  return out;
}

void write_slices(const RunConfig& rc, const Config& cfg, const GridSpec& g, const std::string& prefix,
                  const std::vector<double>& values) {
  for (const auto& [a, b] : slice_pairs(cfg, g)) {
    const SliceTable t = slice(g, a, b);
    const std::string name = prefix + "_" + axis_name(g, a) + "_" + axis_name(g, b) + ".csv";
    auto os = open_out(rc, name);
    write_slice_csv(os, t, values);
    finish(os, name);
  }
}

void cmd_convexify(const RunConfig& rc, const Config& cfg) {
  const Setup s = setup(cfg, rc.overrides);
  const RelaxationResult r = run_relax(s);
  {
    auto os = open_out(rc, "envelope.csv");
    write_field_csv(os, r.envelope, r.lamination_order);
    finish(os, "envelope.csv");
  }
  {
    auto os = open_out(rc, "directions.csv");
    write_directions_csv(os, s.relax.directions);
    finish(os, "directions.csv");
  }
  write_convergence(rc, r);
}

void cmd_convergence(const RunConfig& rc, const Config& cfg) {
  Setup s = setup(cfg, rc.overrides);
  s.relax.track_forest = false;
  write_convergence(rc, run_relax(s));
}

void cmd_error_slices(const RunConfig& rc, const Config& cfg) {
  const Setup s = setup(cfg, rc.overrides);
  Setup ref = s;
  ref.relax.directions = directions_from(cfg.get("relax.reference_directions", "full"), s.grid);
  std::cerr << "reference run (" << ref.relax.directions.size() << " directions)\n";
  const RelaxationResult rr = run_relax(ref);
  std::cerr << "candidate run (" << s.relax.directions.size() << " directions)\n";
  const RelaxationResult rcand = run_relax(s);
  const ScalarField err = relative_error(rr.envelope, rcand.envelope, cfg.get_double("relax.gamma", 1e-8));
  write_slices(rc, cfg, s.grid, "error", err.values);
}

void cmd_lamination(const RunConfig& rc, const Config& cfg) {
  const Setup s = setup(cfg, rc.overrides);
  const RelaxationResult r = run_relax(s);
  const std::vector<double> order(r.lamination_order.begin(), r.lamination_order.end());
  write_slices(rc, cfg, s.grid, "lamination", order);
  write_convergence(rc, r);
}

PathKind parse_path(const std::string& p) {
  if (p == "rank1") return PathKind::Rank1;
  if (p == "rank2") return PathKind::Rank2;
  if (p == "rankd") return PathKind::RankD;
  throw Error(ErrorCode::ConfigError, "lines.path must be rank1, rank2 or rankd, got '" + p + "'");
}

std::vector<double> s_samples(const Config& cfg) {
  std::vector<double> s = cfg.get_list("lines.s");
  if (!s.empty()) return s;
  const double lo = cfg.get_double("lines.s_min", 0.0);
  const double hi = cfg.get_double("lines.s_max", 1.0);
  const int n = cfg.get_int("lines.count", 101);
  if (n < 2 || !(hi > lo)) throw Error(ErrorCode::ConfigError, "lines needs s_min < s_max and count >= 2");
  for (int i = 0; i < n; ++i) s.push_back(lo + (hi - lo) * i / (n - 1));
  return s;
}

void cmd_lines(const RunConfig& rc, const Config& cfg) {
  const Setup s = setup(cfg, rc.overrides);
  const PathKind path = parse_path(cfg.get("lines.path", "rank1"));
  const auto samples = s_samples(cfg);
  std::optional<RelaxationResult> r;
  if (cfg.get_bool("lines.relaxed", true)) r = run_relax(s);
  const auto table =
      line_eval(s.material, s.hist, r ? &r->envelope : nullptr, path, s.grid.dim(), samples);
  auto os = open_out(rc, "lines.csv");
  write_header(os, {"s", "w", "w_envelope"});
  for (const auto& p : table) write_row(os, {p.s, p.w, p.w_envelope});
  finish(os, "lines.csv");
}

void cmd_tree(const RunConfig& rc, const Config& cfg) {
  Setup s = setup(cfg, rc.overrides);
  s.relax.track_forest = true;
  const RelaxationResult r = run_relax(s);
  const int d = s.grid.dim();
  const auto entries = cfg.get_list("tree.f");
  if (static_cast<int>(entries.size()) != d * d) {
    throw Error(ErrorCode::ConfigError, "tree.f needs " + std::to_string(d * d) + " row-major entries");
  }
  Matrix f(d, d);
  for (int i = 0; i < d * d; ++i) f(i / d, i % d) = entries[static_cast<std::size_t>(i)];
  const int depth = cfg.get_int("tree.depth", r.iterations);
  const LaminationTree tree = buildtree(f, *r.forest, depth);
  const Microstructure micro = microstructure(tree, *r.forest, s.material, s.hist);
  auto os = open_out(rc, "tree.json");
  write_tree_json(os, tree, micro);
  finish(os, "tree.json");
}

BvpSpec bvp_from(const Config& cfg, const Overrides& ov) {
  BvpSpec b;
  const std::string kind = cfg.get("bvp.kind", "uniaxial");
  if (kind == "uniaxial") {
    b.kind = BvpKind::Uniaxial;
  } else if (kind == "biaxial") {
    b.kind = BvpKind::Biaxial;
  } else {
    throw Error(ErrorCode::ConfigError, "bvp.kind must be uniaxial or biaxial");
  }
  b.kappa = cfg.get_double("bvp.kappa", b.kappa);
  b.epsilon = cfg.get_double("bvp.epsilon", b.epsilon);
  b.load_steps = cfg.get_list("bvp.load_steps");
  if (b.load_steps.empty() && cfg.has("bvp.u_max")) {
    const double umax = cfg.get_double("bvp.u_max");
    const int n = cfg.get_int("bvp.steps", 20);
    if (n < 1) throw Error(ErrorCode::ConfigError, "bvp.steps must be positive");
    for (int i = 1; i <= n; ++i) b.load_steps.push_back(umax * i / n);
  }
  for (std::size_t i = 1; i < b.load_steps.size(); ++i)
    if (b.load_steps[i] < b.load_steps[i - 1]) throw Error(ErrorCode::ConfigError, "bvp.load_steps must be monotone");
  b.material = material_from(cfg);
  b.relaxed = cfg.get_bool("bvp.relaxed", false);
  const std::string policy = cfg.get("bvp.policy", "fix_after_first_nonconvex");
  if (policy == "fix_after_first_nonconvex") {
    b.policy = RelaxPolicy::FixAfterFirstNonconvex;
  } else if (policy == "per_step") {
    b.policy = RelaxPolicy::PerStep;
  } else {
    throw Error(ErrorCode::ConfigError, "bvp.policy must be fix_after_first_nonconvex or per_step");
  }
  b.solver_tol = cfg.get_double("bvp.solver_tol", b.solver_tol);
  b.max_iterations = cfg.get_int("bvp.max_iterations", b.max_iterations);
  if (b.relaxed) {
    b.relax.grid = grid_from(cfg);
    b.relax.directions = directions_from(ov.directions.value_or(cfg.get("relax.directions", "reduced:1")), b.relax.grid);
    b.relax.tol = ov.tol.value_or(cfg.get_double("relax.tol", b.relax.tol));
    b.relax.k_max = ov.k_max.value_or(cfg.get_int("relax.k_max", b.relax.k_max));
    const std::string stress = cfg.get("bvp.stress", "tree");
    if (stress == "tree") {
      b.relax.stress = StressMode::Tree;
    } else if (stress == "subdifferential") {
      b.relax.stress = StressMode::Subdifferential;
    } else {
      throw Error(ErrorCode::ConfigError, "bvp.stress must be tree or subdifferential");
    }
    b.relax.nonconvex_tol = cfg.get_double("bvp.nonconvex_tol", b.relax.nonconvex_tol);
    b.relax.threads = ov.threads;
  }
  return b;
}

void cmd_bvp(const RunConfig& rc, const Config& cfg) {
  const BvpSpec b = bvp_from(cfg, rc.overrides);
  const std::string solver = cfg.get("bvp.solver", b.kind == BvpKind::Uniaxial ? "descent" : "newton");
  FdCurve curve;
  if (solver == "descent") {
    curve = solve_descent(b);
  } else if (solver == "newton") {
    curve = solve_newton(b);
  } else {
    throw Error(ErrorCode::ConfigError, "bvp.solver must be descent or newton");
  }
  {
    auto os = open_out(rc, "curve.csv");
    write_curve_csv(os, curve);
    finish(os, "curve.csv");
  }
  auto os = open_out(rc, "log.csv");
  write_log_csv(os, curve);
  finish(os, "log.csv");
}

// 19 x 19 diagonal by 11 x 11 off-diagonal nodes = 43681.
constexpr const char* kScalingDefaults[][2] = {
    {"grid.d", "2"},          {"grid.step", "0.15"},     {"grid.diag_min", "1.0"},
    {"grid.diag_max", "3.7"}, {"grid.off_min", "-0.75"}, {"grid.off_max", "0.75"},
    {"material.beta_k", "0.06"}};

void cmd_scaling(const RunConfig& rc, const Config& user) {
  Config cfg = user;
  if (!cfg.has("grid.step"))
    for (const auto& kv : kScalingDefaults)
      if (!cfg.has(kv[0])) cfg.set(kv[0], kv[1]);
  Setup s = setup(cfg, rc.overrides);
  s.relax.track_forest = false;
  s.relax.tol = std::numeric_limits<double>::min();  // run exactly `sweeps` sweeps
  s.relax.k_max = cfg.get_int("scaling.sweeps", 1);
  const int repeats = std::max(1, cfg.get_int("scaling.repeats", 1));
  std::vector<double> threads = cfg.get_list("scaling.threads");
  if (threads.empty()) threads = {1, 2, 4, 8};

  const ScalarField init = initial_field(s);
  auto os = open_out(rc, "scaling.csv");
  write_header(os, {"threads", "seconds", "efficiency"});
  double t1 = 0.0;
  for (double tt : threads) {
    const int t = static_cast<int>(tt);
    if (t < 1) throw Error(ErrorCode::ConfigError, "scaling.threads entries must be positive");
    RelaxationConfig c = s.relax;
    c.threads = t;
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < repeats; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      (void)relax(init, c);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    if (t1 == 0.0) t1 = best * threads.front();
    const double eff = t1 / (t * best);
    os << t << ", " << format_double(best) << ", " << format_double(eff) << '\n';
    std::cerr << "  " << t << " threads: " << best << " s, efficiency " << eff << '\n';
  }
  finish(os, "scaling.csv");
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "convexify") return Command::Convexify;
  if (name == "convergence-table") return Command::ConvergenceTable;
  if (name == "error-slices") return Command::ErrorSlices;
  if (name == "lamination-matrix") return Command::LaminationMatrix;
  if (name == "lines") return Command::Lines;
  if (name == "tree") return Command::Tree;
  if (name == "bvp") return Command::Bvp;
  if (name == "scaling") return Command::Scaling;
  throw Error(ErrorCode::ConfigError, "unknown command '" + name + "'");
}

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::Convexify: return "convexify";
    case Command::ConvergenceTable: return "convergence-table";
    case Command::ErrorSlices: return "error-slices";
    case Command::LaminationMatrix: return "lamination-matrix";
    case Command::Lines: return "lines";
    case Command::Tree: return "tree";
    case Command::Bvp: return "bvp";
    case Command::Scaling: return "scaling";
  }
  return "?";
}

void run(const RunConfig& rc, const Config& cfg) {
  if (rc.overrides.threads < 1) throw Error(ErrorCode::ConfigError, "--threads must be at least 1");
  switch (rc.command) {
    case Command::Convexify: cmd_convexify(rc, cfg); break;
    case Command::ConvergenceTable: cmd_convergence(rc, cfg); break;
    case Command::ErrorSlices: cmd_error_slices(rc, cfg); break;
    case Command::LaminationMatrix: cmd_lamination(rc, cfg); break;
    case Command::Lines: cmd_lines(rc, cfg); break;
    case Command::Tree: cmd_tree(rc, cfg); break;
    case Command::Bvp: cmd_bvp(rc, cfg); break;
    case Command::Scaling: cmd_scaling(rc, cfg); break;
  }
}

int exit_code_for(const Error& e) noexcept {
  switch (e.code()) {
    case ErrorCode::ConfigParse:
    case ErrorCode::ConfigError: return kConfigFailure;
    case ErrorCode::Io: return kIoFailure;
    default: return kNumericalFailure;
  }
}

}  // namespace rankone::cli
