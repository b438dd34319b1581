#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fqe/operators.hpp"
#include "fqe/wavefunction.hpp"

// Seeded random operators for tests, verification and benchmarks. Everything draws from
// std::mt19937_64 with a hand-rolled Box-Muller so the values do not depend on the
// standard library's distribution implementations.

namespace fqe {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  /// Integer in [0, n); the modulo bias is irrelevant at the sizes used here.
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }
  double uniform() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }
  cd complex_normal() {
    const double re = normal();
    return {re, normal()};
  }

 private:
  std::mt19937_64 gen_;
};

inline CMatrix random_hermitian(int m, Rng& rng, double scale = 1.0) {
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = scale * rng.complex_normal();
  return 0.5 * (a + a.adjoint());
}

inline CMatrix random_unitary(int m, Rng& rng) {
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(m, m);
}

/// V with V_ijkl = V_jilk and V_lkji = conj(V_ijkl), which makes Σ V a†a†aa Hermitian.
inline Tensor4 random_two_body(int m, Rng& rng, double scale = 1.0) {
  Tensor4 v(m);
  for (auto& x : v.data) x = scale * rng.complex_normal();
  Tensor4 s(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) s(i, j, k, l) = 0.5 * (v(i, j, k, l) + v(j, i, l, k));
  Tensor4 h(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) h(i, j, k, l) = 0.5 * (s(i, j, k, l) + std::conj(s(k, l, i, j)));
  return h;
}

inline RestrictedHamiltonian random_restricted(int m, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  RestrictedHamiltonian h;
  h.h1 = random_hermitian(m, rng, scale);
  h.v2 = random_two_body(m, rng, scale);
  h.e0 = scale * rng.normal();
  return h;
}

inline SSOHamiltonian random_sso(int m, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  SSOHamiltonian h;
  h.h1a = random_hermitian(m, rng, scale);
  h.h1b = random_hermitian(m, rng, scale);
  h.v_aa = random_two_body(m, rng, scale);
  h.v_bb = random_two_body(m, rng, scale);
  h.v_ab = random_two_body(m, rng, scale);
  h.e0 = scale * rng.normal();
  return h;
}

inline Wavefunction random_wavefunction(int m, std::initializer_list<std::pair<int, int>> counts, std::uint64_t seed) {
  std::vector<SectorTriple> t;
  for (auto [na, nb] : counts) t.push_back({na + nb, na - nb, m});
  return initialize(create_wavefunction(t), RandomInit{seed});
}

}  // namespace fqe
