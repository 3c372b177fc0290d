#include "rankone/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rankone/error.hpp"

namespace rankone {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::ConfigError, key + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  return parse(in);
}

std::string Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "missing key '" + key + "'");
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const { return to_double(key, get(key)); }

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ConfigError, key + ": not an integer: '" + text + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::ConfigError, key + ": not a boolean: '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  std::string text = get(key);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(to_double(key, tok));
  return out;
}

MaterialSpec material_from(const Config& cfg) {
  MaterialSpec m;
  m.model = parse_model(cfg.get("material.model", "NEOHOOKE"));
  m.lambda = cfg.get_double("material.lambda", m.lambda);
  m.mu = cfg.get_double("material.mu", m.mu);
  m.d0 = cfg.get_double("material.d0", m.d0);
  m.dinf = cfg.get_double("material.dinf", m.dinf);
  const std::string jac = cfg.get("material.jacobian", "signed");
  if (jac == "signed") {
    m.jacobian = Jacobian::Signed;
  } else if (jac == "invariant_root") {
    m.jacobian = Jacobian::InvariantRoot;
  } else {
    throw Error(ErrorCode::ConfigError, "material.jacobian must be signed or invariant_root");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return m;
}

HistoryState history_from(const Config& cfg, int d) {
  const double beta = cfg.get_double("material.beta_k", 0.0);
  if (beta < 0.0) throw Error(ErrorCode::ConfigError, "material.beta_k must be non-negative");
  return HistoryState::with_beta(d, beta);
}

GridSpec grid_from(const Config& cfg) {
  const int d = cfg.get_int("grid.d", 2);
  if (d < 1 || d > 3) throw Error(ErrorCode::ConfigError, "grid.d must be 1, 2 or 3");
  const double step = cfg.get_double("grid.step");
  std::vector<AxisSpec> axes;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const bool diag = i == j;
      AxisSpec ax;
      ax.min = cfg.get_double(diag ? "grid.diag_min" : "grid.off_min", diag ? 1.0 : 0.0);
      ax.max = cfg.get_double(diag ? "grid.diag_max" : "grid.off_max", diag ? 1.0 : 0.0);
      ax.step = step;
      const std::string c = "grid.F" + std::to_string(i + 1) + std::to_string(j + 1);
      ax.min = cfg.get_double(c + ".min", ax.min);
      ax.max = cfg.get_double(c + ".max", ax.max);
      ax.step = cfg.get_double(c + ".step", ax.step);
      axes.push_back(ax);
    }
  try {
    return GridSpec(d, std::move(axes));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

DirectionSet directions_from(const std::string& text, const GridSpec& grid) {
  if (text == "full") {
    double r = 0.0;
    for (int a = 0; a < grid.axis_count(); ++a) {
      r = std::max({r, std::abs(grid.axis(a).min), std::abs(grid.axis(a).max)});
    }
    const double delta = grid.uniform_step();
    if (!(delta > 0.0)) throw Error(ErrorCode::ConfigError, "full direction set needs a uniform grid step");
    return full_set(delta, r, grid.dim());
  }
  if (text.rfind("reduced:", 0) == 0) {
    const std::string k = text.substr(8);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), v);
    if (ec != std::errc() || ptr != k.data() + k.size() || v < 1) {
      throw Error(ErrorCode::ConfigError, "bad direction spec '" + text + "'");
    }
    return reduced_set(v, grid.dim());
  }
  throw Error(ErrorCode::ConfigError, "direction spec must be 'reduced:k' or 'full', got '" + text + "'");
}

}  // namespace rankone
