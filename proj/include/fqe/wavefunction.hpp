#pragma once

#include <Eigen/Dense>

#include <algorithm>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fqe/bitstring.hpp"
#include "fqe/error.hpp"
#include "fqe/fci_graph.hpp"

namespace fqe {

using cd = std::complex<double>;
/// Rows are alpha strings, columns beta strings.
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;

inline constexpr int kDefaultDenseCap = 7;

struct Sector {
  SectorKey key;
  std::shared_ptr<const FciGraph> graph;
  CMatrix coeff;

  int n_alpha() const { return key.n_alpha(); }
  int n_beta() const { return key.n_beta(); }
  std::size_t size() const { return static_cast<std::size_t>(coeff.size()); }
};

/// Direct sum of (n, sz) sectors over a shared set of m spatial orbitals.
class Wavefunction {
 public:
  Wavefunction() = default;

  Wavefunction(int norb, std::span<const SectorKey> keys) : norb_(norb) {
    for (const auto& k : keys) add_sector(k);
  }

  Wavefunction(int norb, std::initializer_list<SectorKey> keys)
      : Wavefunction(norb, std::span<const SectorKey>(keys.begin(), keys.size())) {}

  int norb() const { return norb_; }
  bool empty() const { return sectors_.empty(); }

  bool has_sector(const SectorKey& k) const { return sectors_.count(k) != 0; }

  Sector& sector(const SectorKey& k) {
    auto it = sectors_.find(k);
    if (it == sectors_.end()) throw DomainError("wavefunction has no sector " + to_string(k));
    return it->second;
  }
  const Sector& sector(const SectorKey& k) const {
    auto it = sectors_.find(k);
    if (it == sectors_.end()) throw DomainError("wavefunction has no sector " + to_string(k));
    return it->second;
  }

  const std::map<SectorKey, Sector>& sectors() const { return sectors_; }
  std::map<SectorKey, Sector>& sectors() { return sectors_; }

  std::vector<SectorKey> keys() const {
    std::vector<SectorKey> out;
    for (const auto& [k, s] : sectors_) out.push_back(k);
    return out;
  }

  Sector& add_sector(const SectorKey& k) {
    validate_sector(k, norb_);
    if (has_sector(k)) throw DomainError("duplicate sector " + to_string(k));
    auto graph = build_fci_graph(k.n_alpha(), k.n_beta(), norb_);
    Sector s{k, graph,
             CMatrix::Zero(static_cast<Eigen::Index>(graph->dim_alpha()),
                           static_cast<Eigen::Index>(graph->dim_beta()))};
    return sectors_.emplace(k, std::move(s)).first->second;
  }

  /// Same sectors, all amplitudes zero.
  Wavefunction zeros_like() const {
    Wavefunction out = *this;
    for (auto& [k, s] : out.sectors_) s.coeff.setZero();
    return out;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& [k, s] : sectors_) total += s.size();
    return total;
  }

  void scale(cd a) {
    for (auto& [k, s] : sectors_) s.coeff *= a;
  }

  /// this += a * x, over the sectors of x (all must exist in this).
  void axpy(cd a, const Wavefunction& x) {
    check_compatible(x);
    for (const auto& [k, s] : x.sectors_) sector(k).coeff += a * s.coeff;
  }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& [k, s] : sectors_) acc += s.coeff.squaredNorm();
    return acc;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  void normalize() {
    const double nrm = norm();
    if (nrm == 0.0) throw NumericError("cannot normalize a zero wavefunction");
    scale(1.0 / nrm);
  }

  void check_compatible(const Wavefunction& other) const {
    if (other.norb_ != norb_)
      throw DomainError("orbital count mismatch: " + std::to_string(norb_) + " vs " +
                        std::to_string(other.norb_));
  }

 private:
  int norb_ = 0;
  std::map<SectorKey, Sector> sectors_;
};

/// Zero-initialized wavefunction from (n, sz, m) triples sharing m.
inline Wavefunction create_wavefunction(std::span<const SectorTriple> triples) {
  if (triples.empty()) throw DomainError("create_wavefunction: no sectors given");
  const int m = triples.front().m;
  std::vector<SectorKey> keys;
  for (const auto& t : triples) {
    if (t.m != m)
      throw DomainError("create_wavefunction: inconsistent orbital counts " + std::to_string(m) +
                        " and " + std::to_string(t.m));
    keys.push_back(t.key());
  }
  return Wavefunction(m, keys);
}

inline Wavefunction create_wavefunction(std::initializer_list<SectorTriple> triples) {
  return create_wavefunction(std::span<const SectorTriple>(triples.begin(), triples.size()));
}

/// Σ_sectors Σ_IαIβ conj(a)·b; sectors missing on either side contribute zero.
inline cd inner_product(const Wavefunction& a, const Wavefunction& b) {
  a.check_compatible(b);
  cd acc = 0.0;
  for (const auto& [k, sa] : a.sectors()) {
    if (!b.has_sector(k)) continue;
    const auto& sb = b.sector(k);
    acc += (sa.coeff.conjugate().cwiseProduct(sb.coeff)).sum();
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Initialization

/// Gaussian amplitudes from std::mt19937_64(seed). Sectors in ascending key order,
/// each row-major; each amplitude consumes two 64-bit draws u1, u2 mapped to
/// (0, 1] as ((x >> 11) + 1) * 2^-53 and combined by Box-Muller into
/// re = r cos(2πu2), im = r sin(2πu2), r = sqrt(-2 ln u1). The state is then normalized.
struct RandomInit {
  std::uint64_t seed = 0;
};

/// Amplitude 1 on the determinant filling the lowest orbitals of each channel.
struct HartreeFockInit {};

struct Assignment {
  bits_t alpha = 0;
  bits_t beta = 0;
  cd amplitude = 0.0;
};

struct ExplicitInit {
  std::vector<Assignment> assignments;
};

using InitStrategy = std::variant<RandomInit, HartreeFockInit, ExplicitInit>;

namespace detail {
inline double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}
}  // namespace detail

inline Wavefunction initialize(const Wavefunction& w, const InitStrategy& strategy) {
  Wavefunction out = w.zeros_like();
  if (const auto* r = std::get_if<RandomInit>(&strategy)) {
    std::mt19937_64 rng(r->seed);
    for (auto& [k, s] : out.sectors()) {
      for (Eigen::Index i = 0; i < s.coeff.rows(); ++i)
        for (Eigen::Index j = 0; j < s.coeff.cols(); ++j) {
          const double u1 = detail::unit_interval(rng);
          const double u2 = detail::unit_interval(rng);
          const double rad = std::sqrt(-2.0 * std::log(u1));
          const double ang = 2.0 * std::numbers::pi * u2;
          s.coeff(i, j) = cd(rad * std::cos(ang), rad * std::sin(ang));
        }
    }
    if (out.size() > 0) out.normalize();
  } else if (std::holds_alternative<HartreeFockInit>(strategy)) {
    if (out.sectors().size() != 1)
      throw DomainError("hartree_fock initialization requires exactly one sector");
    auto& s = out.sectors().begin()->second;
    s.coeff(static_cast<Eigen::Index>(s.graph->index_alpha(below(s.n_alpha()))),
            static_cast<Eigen::Index>(s.graph->index_beta(below(s.n_beta())))) = 1.0;
  } else {
    const auto& ex = std::get<ExplicitInit>(strategy);
    for (const auto& a : ex.assignments) {
      if ((a.alpha >> out.norb()) != 0 || (a.beta >> out.norb()) != 0)
        throw DomainError("explicit assignment uses orbitals beyond m=" +
                          std::to_string(out.norb()));
      const auto key = SectorKey::from_counts(popcount(a.alpha), popcount(a.beta));
      if (!out.has_sector(key))
        throw DomainError("explicit assignment targets missing sector " + to_string(key));
      auto& s = out.sector(key);
      s.coeff(static_cast<Eigen::Index>(s.graph->index_alpha(a.alpha)),
              static_cast<Eigen::Index>(s.graph->index_beta(a.beta))) = a.amplitude;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense Jordan-Wigner vectors. Basis index bit 2p is (p, alpha), bit 2p+1 is
// (p, beta); a basis state is the ascending product of creators in that
// interleaved order. Internally determinants are alpha-block-first, so the
// conversion picks up (-1)^#{(p in alpha, q in beta) : q < p}.

inline std::uint64_t interleave(bits_t alpha, bits_t beta) {
  std::uint64_t out = 0;
  for (int p = 0; alpha >> p || beta >> p; ++p) {
    if (occupied(alpha, p)) out |= std::uint64_t{1} << (2 * p);
    if (occupied(beta, p)) out |= std::uint64_t{1} << (2 * p + 1);
  }
  return out;
}

inline std::pair<bits_t, bits_t> deinterleave(std::uint64_t index) {
  bits_t a = 0;
  bits_t b = 0;
  for (int p = 0; index >> (2 * p); ++p) {
    if ((index >> (2 * p)) & 1U) a |= bits_t{1} << p;
    if ((index >> (2 * p + 1)) & 1U) b |= bits_t{1} << p;
  }
  return {a, b};
}

/// Sign relating the alpha-first determinant to the interleaved basis state.
inline int reorder_sign(bits_t alpha, bits_t beta) {
  int count = 0;
  for (bits_t a = alpha; a; a &= a - 1) count += popcount(beta & below(std::countr_zero(a)));
  return (count & 1) ? -1 : 1;
}

inline CVector to_dense(const Wavefunction& w, int cap = kDefaultDenseCap) {
  if (w.norb() > cap)
    throw ResourceError("to_dense: m=" + std::to_string(w.norb()) + " exceeds dense cap " +
                        std::to_string(cap));
  CVector v = CVector::Zero(Eigen::Index{1} << (2 * w.norb()));
  for (const auto& [k, s] : w.sectors()) {
    const auto& sa = s.graph->alpha();
    const auto& sb = s.graph->beta();
    for (std::size_t ia = 0; ia < sa.size(); ++ia)
      for (std::size_t ib = 0; ib < sb.size(); ++ib) {
        const bits_t a = sa.string(ia);
        const bits_t b = sb.string(ib);
        v(static_cast<Eigen::Index>(interleave(a, b))) +=
            static_cast<double>(reorder_sign(a, b)) *
            s.coeff(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib));
      }
  }
  return v;
}

/// Inverse of to_dense; amplitudes with |amp| <= thresh are dropped and sectors are
/// created for every occupancy pattern that survives.
inline Wavefunction from_dense(const CVector& v, double thresh = 1.0e-12,
                               int cap = kDefaultDenseCap) {
  const auto len = static_cast<std::uint64_t>(v.size());
  if (len == 0 || (len & (len - 1)) != 0 || (std::countr_zero(len) & 1) != 0)
    throw DomainError("from_dense: length " + std::to_string(len) + " is not a power of 4");
  const int m = std::countr_zero(len) / 2;
  if (m > cap)
    throw ResourceError("from_dense: m=" + std::to_string(m) + " exceeds dense cap " +
                        std::to_string(cap));
  std::vector<SectorKey> keys;
  for (std::uint64_t i = 0; i < len; ++i) {
    if (std::abs(v(static_cast<Eigen::Index>(i))) <= thresh) continue;
    auto [a, b] = deinterleave(i);
    const auto key = SectorKey::from_counts(popcount(a), popcount(b));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  Wavefunction w(m, keys);
  for (std::uint64_t i = 0; i < len; ++i) {
    const cd amp = v(static_cast<Eigen::Index>(i));
    if (std::abs(amp) <= thresh) continue;
    auto [a, b] = deinterleave(i);
    auto& s = w.sector(SectorKey::from_counts(popcount(a), popcount(b)));
    s.coeff(static_cast<Eigen::Index>(s.graph->index_alpha(a)),
            static_cast<Eigen::Index>(s.graph->index_beta(b))) =
        static_cast<double>(reorder_sign(a, b)) * amp;
  }
  return w;
}

}  // namespace fqe
