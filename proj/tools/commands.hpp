#pragma once

#include <optional>
#include <string>

#include "rankone/config.hpp"
#include "rankone/error.hpp"

namespace rankone::cli {

enum class Command { Convexify, ConvergenceTable, ErrorSlices, LaminationMatrix, Lines, Tree, Bvp, Scaling };

/// Flag values; unset flags leave the config file in charge.
struct Overrides {
  std::optional<double> tol;
  std::optional<int> k_max;
  std::optional<std::string> directions;
  bool track_forest = false;
  int threads = 1;
};

struct RunConfig {
  Command command = Command::Convexify;
  std::string config_path;  // empty: built-in defaults only
  std::string out_dir = ".";
  Overrides overrides;
};

enum ExitCode { kOk = 0, kConfigFailure = 2, kNumericalFailure = 3, kIoFailure = 4 };

Command parse_command(const std::string& name);
const char* to_string(Command c) noexcept;

/// Runs one command and writes its artifacts. Library errors escape as
/// rankone::Error; exit_code_for maps them.
void run(const RunConfig& rc, const Config& cfg);

int exit_code_for(const Error& e) noexcept;

}  // namespace rankone::cli
