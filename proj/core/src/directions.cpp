#include "rankone/directions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "rankone/csv.hpp"
#include "rankone/error.hpp"

namespace rankone {

namespace {

__extension__ typedef unsigned __int128 Key;

constexpr int kKeyBits = 14;
constexpr long kKeyOffset = 1L << (kKeyBits - 1);

using IntVec = std::array<long, 3>;

// Integer vectors v in Z^d with lo <= |v|_inf <= hi, lexicographic order.
std::vector<IntVec> shell(int d, long lo, long hi) {
  std::vector<IntVec> out;
  IntVec v{};
  const auto rec = [&](auto&& self, int i) -> void {
    if (i == d) {
      long m = 0;
      for (int j = 0; j < d; ++j) m = std::max(m, std::abs(v[static_cast<std::size_t>(j)]));
      if (m >= lo && m <= hi) out.push_back(v);
      return;
    }
    for (long x = -hi; x <= hi; ++x) {
      v[static_cast<std::size_t>(i)] = x;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return out;
}

// Sign-canonical outer product packed into a key; `flip` reports whether a
// had to be negated.
Key canonical_key(const IntVec& a, const IntVec& b, int d, bool& flip) {
  std::array<long, 9> r{};
  int first = -1;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const long v = a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
      r[static_cast<std::size_t>(i * d + j)] = v;
      if (first < 0 && v != 0) first = i * d + j;
    }
  flip = first >= 0 && r[static_cast<std::size_t>(first)] < 0;
  Key key = 0;
  for (int n = 0; n < d * d; ++n) {
    const long v = flip ? -r[static_cast<std::size_t>(n)] : r[static_cast<std::size_t>(n)];
    if (v <= -kKeyOffset || v >= kKeyOffset) {
      throw Error(ErrorCode::InvalidArgument, "direction entries too large to enumerate");
    }
    key = (key << kKeyBits) | static_cast<Key>(v + kKeyOffset);
  }
  return key;
}

struct Candidate {
  Key key;
  std::size_t order;  // index into the a-major (a, b) enumeration
};

struct Pair {
  IntVec a;
  IntVec b;
};

// Deduplicated canonical (a, b) pairs in order of first appearance.
std::vector<Pair> enumerate(int d, long a_max, long b_lo, long b_hi) {
  const auto as = shell(d, 1, a_max);
  const auto bs = shell(d, std::max(1L, b_lo), b_hi);
  std::vector<Candidate> all;
  all.reserve(as.size() * bs.size());
  bool flip = false;
  for (const auto& a : as)
    for (const auto& b : bs) all.push_back({canonical_key(a, b, d, flip), all.size()});
  std::sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) {
    return x.key != y.key ? x.key < y.key : x.order < y.order;
  });
  all.erase(std::unique(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) { return x.key == y.key; }),
            all.end());
  std::sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) { return x.order < y.order; });

  std::vector<Pair> out;
  out.reserve(all.size());
  for (const auto& c : all) {
    Pair p{as[c.order / bs.size()], bs[c.order % bs.size()]};
    canonical_key(p.a, p.b, d, flip);
    if (flip)
      for (auto& x : p.a) x = -x;
    out.push_back(p);
  }
  return out;
}

struct FullBounds {
  long a_max;
  long b_lo;
  long b_hi;
};

FullBounds full_bounds(double delta, double r, int d) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "r must be positive");
  if (d < 1 || d > 3) throw Error(ErrorCode::InvalidArgument, "d must be 1, 2 or 3");
  FullBounds fb{};
  fb.a_max = static_cast<long>(std::floor(2.0 * d * r / delta + 1e-9));
  fb.b_lo = static_cast<long>(std::ceil((1.0 - d * delta) / delta - 1e-9));
  fb.b_hi = static_cast<long>(std::floor((1.0 + d * delta) / delta + 1e-9));
  fb.b_lo = std::max(1L, fb.b_lo);
  if (fb.b_hi < fb.b_lo || fb.a_max < 1) throw Error(ErrorCode::EmptySet, "no admissible rank-one directions");
  return fb;
}

Direction make_direction(const IntVec& a, const IntVec& b, int d, double scale) {
  Direction dir;
  dir.a.resize(d);
  dir.b.resize(d);
  for (int i = 0; i < d; ++i) {
    dir.a(i) = scale * static_cast<double>(a[static_cast<std::size_t>(i)]);
    dir.b(i) = scale * static_cast<double>(b[static_cast<std::size_t>(i)]);
  }
  dir.r = dir.a * dir.b.transpose();
  return dir;
}

}  // namespace

DirectionSet full_set(double delta, double r, int d) {
  const FullBounds fb = full_bounds(delta, r, d);
  DirectionSet set;
  set.kind = DirectionSet::Kind::Full;
  set.d = d;
  set.delta = delta;
  set.radius = r;
  for (const auto& c : enumerate(d, fb.a_max, fb.b_lo, fb.b_hi)) set.entries.push_back(make_direction(c.a, c.b, d, delta));
  return set;
}

std::int64_t full_set_size(double delta, double r, int d) {
  const FullBounds fb = full_bounds(delta, r, d);
  const auto as = shell(d, 1, fb.a_max);
  const auto bs = shell(d, fb.b_lo, fb.b_hi);
  std::vector<Key> keys;
  keys.reserve(as.size() * bs.size());
  bool flip = false;
  for (const auto& a : as)
    for (const auto& b : bs) keys.push_back(canonical_key(a, b, d, flip));
  std::sort(keys.begin(), keys.end());
  return std::unique(keys.begin(), keys.end()) - keys.begin();
}

DirectionSet reduced_set(int k, int d) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (d < 1 || d > 3) throw Error(ErrorCode::InvalidArgument, "d must be 1, 2 or 3");
  DirectionSet set;
  set.kind = DirectionSet::Kind::Reduced;
  set.d = d;
  set.k = k;
  for (const auto& c : enumerate(d, k, 1, k)) set.entries.push_back(make_direction(c.a, c.b, d, 1.0));
  return set;
}

void write_directions_csv(std::ostream& os, const DirectionSet& set) {
  std::vector<std::string> header;
  for (int i = 1; i <= set.d; ++i) header.push_back("a" + std::to_string(i));
  for (int i = 1; i <= set.d; ++i) header.push_back("b" + std::to_string(i));
  write_header(os, header);
  std::vector<double> row(static_cast<std::size_t>(2 * set.d));
  for (const auto& e : set.entries) {
    for (int i = 0; i < set.d; ++i) {
      row[static_cast<std::size_t>(i)] = e.a(i);
      row[static_cast<std::size_t>(set.d + i)] = e.b(i);
    }
    write_row(os, row);
  }
}

}  // namespace rankone
