#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "fqe/error.hpp"

namespace fqe {

using bits_t = std::uint64_t;

inline constexpr int kMaxOrbitals = 62;

namespace detail {
inline const std::array<std::array<std::uint64_t, 64>, 64>& binomial_table() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, 64>, 64> t{};
    for (int n = 0; n < 64; ++n) {
      t[n][0] = 1;
      for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}
}  // namespace detail

/// C(n, k); zero outside 0 <= k <= n.
inline std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n || n >= 64) return 0;
  return detail::binomial_table()[n][k];
}

inline int popcount(bits_t b) { return std::popcount(b); }

/// Mask of orbitals strictly below p.
inline bits_t below(int p) { return (bits_t{1} << p) - 1; }

inline bool occupied(bits_t b, int p) { return (b >> p) & 1U; }

/// (-1)^(number of occupied orbitals strictly below p).
inline int parity_below(bits_t b, int p) { return (popcount(b & below(p)) & 1) ? -1 : 1; }

/// (-1)^(number of occupied orbitals strictly between i and j).
inline int parity_between(bits_t b, int i, int j) {
  if (i == j) return 1;
  const int lo = i < j ? i : j;
  const int hi = i < j ? j : i;
  const bits_t mask = below(hi) & ~below(lo + 1);
  return (popcount(b & mask) & 1) ? -1 : 1;
}

/// Occupancy pattern of one spin channel over m spatial orbitals (orbital p <-> bit p).
struct SpinString {
  bits_t bits = 0;
  int m = 0;
  int n = 0;

  bool valid() const {
    return m >= 0 && m <= kMaxOrbitals && n >= 0 && n <= m && popcount(bits) == n &&
           (bits >> m) == 0;
  }
};

/// Rank of s.bits among all C(m, n) strings ordered by ascending integer value.
/// Uses the combinatorial number system: sum over the k-th set bit at position p of C(p, k).
inline std::uint64_t lexical_index(bits_t bits) {
  std::uint64_t rank = 0;
  int k = 0;
  while (bits) {
    const int p = std::countr_zero(bits);
    ++k;
    rank += binomial(p, k);
    bits &= bits - 1;
  }
  return rank;
}

inline std::uint64_t lexical_index(const SpinString& s) {
  if (!s.valid())
    throw DomainError("lexical_index: string does not have " + std::to_string(s.n) +
                      " electrons in " + std::to_string(s.m) + " orbitals");
  return lexical_index(s.bits);
}

/// All m-orbital strings with n set bits, ascending. Gosper's hack.
inline std::vector<bits_t> enumerate_strings(int m, int n) {
  if (n < 0 || n > m || m > kMaxOrbitals)
    throw DomainError("enumerate_strings: invalid (m=" + std::to_string(m) +
                      ", n=" + std::to_string(n) + ")");
  std::vector<bits_t> out;
  out.reserve(binomial(m, n));
  if (n == 0) {
    out.push_back(0);
    return out;
  }
  bits_t x = below(n);
  const bits_t limit = bits_t{1} << m;
  while (x < limit) {
    out.push_back(x);
    const bits_t c = x & (~x + 1);
    const bits_t r = x + c;
    x = (((r ^ x) >> 2) / c) | r;
  }
  return out;
}

/// Bits printed most-significant orbital first, width m.
inline std::string bits_to_string(bits_t b, int m) {
  std::string s(static_cast<std::size_t>(m), '0');
  for (int p = 0; p < m; ++p)
    if (occupied(b, p)) s[static_cast<std::size_t>(m - 1 - p)] = '1';
  return s;
}

}  // namespace fqe
