#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rankone {

/// 17 significant digits; round-trips every double.
std::string format_double(double v);

/// Writes a comma-separated header line.
void write_header(std::ostream& os, const std::vector<std::string>& columns);

/// Writes one row of doubles.
void write_row(std::ostream& os, const std::vector<double>& values);

}  // namespace rankone
