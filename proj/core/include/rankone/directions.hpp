#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rankone/types.hpp"

namespace rankone {

struct Direction {
  Vector a;
  Vector b;
  Matrix r;  // a b^T, first nonzero entry positive
};

struct DirectionSet {
  enum class Kind { Full, Reduced };

  Kind kind = Kind::Reduced;
  int d = 0;
  double delta = 0.0;   // Full only
  double radius = 0.0;  // Full only
  int k = 0;            // Reduced only
  std::vector<Direction> entries;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
};

/// All a (x) b with a, b in delta Z^d, |a|_inf <= 2 d r and
/// 1 - d delta <= |b|_inf <= 1 + d delta, identified up to sign.
/// Throws EmptySet if no b qualifies.
DirectionSet full_set(double delta, double r, int d);

/// Cardinality of full_set without materializing the directions.
std::int64_t full_set_size(double delta, double r, int d);

/// All a (x) b with nonzero integer vectors |a|_inf, |b|_inf <= k, sign
/// quotiented, exact duplicates removed. Order: first appearance when a and
/// then b run lexicographically from -k to k.
DirectionSet reduced_set(int k, int d);

/// Writes `a1..ad, b1..bd` rows.
void write_directions_csv(std::ostream& os, const DirectionSet& set);

}  // namespace rankone
