#include "rankone/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace rankone {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(std::ostream& os, const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) os << ", ";
    os << columns[i];
  }
  os << '\n';
}

void write_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << format_double(values[i]);
  }
  os << '\n';
}

}  // namespace rankone
