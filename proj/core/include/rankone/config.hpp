#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rankone/directions.hpp"
#include "rankone/grid.hpp"
#include "rankone/material.hpp"

namespace rankone {

/// Flat `key = value` text with dotted sections. '#' starts a comment;
/// blank lines are ignored; later assignments override earlier ones.
class Config {
 public:
  /// Throws ConfigParse on malformed lines.
  static Config parse(std::istream& in);
  /// Throws Io if the file cannot be opened.
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Typed getters throw ConfigError on missing keys (no fallback given) or
  /// unparsable values.
  [[nodiscard]] std::string get(const std::string& key) const;
  [[nodiscard]] std::string get(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  /// Comma- or whitespace-separated list of doubles; empty if absent.
  [[nodiscard]] std::vector<double> get_list(const std::string& key) const;

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// material.{model, lambda, mu, d0, dinf, jacobian (signed | invariant_root)}.
MaterialSpec material_from(const Config& cfg);
/// material.beta_k with F_k = I.
HistoryState history_from(const Config& cfg, int d);
/// grid.{d, step, diag_min, diag_max, off_min, off_max}; grid.Fij.{min,max,step}
/// override single components.
GridSpec grid_from(const Config& cfg);
/// "reduced:k" or "full"; the full set takes its radius from the largest
/// absolute grid bound and its delta from the grid step.
DirectionSet directions_from(const std::string& text, const GridSpec& grid);

}  // namespace rankone
