#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fqe/apply.hpp"
#include "fqe/error.hpp"
#include "fqe/io.hpp"
#include "fqe/operators.hpp"
#include "fqe/wavefunction.hpp"

// Index convention for every tensor returned here:
//   spin-summed   Γ[i1..ik, j1..jk] = Σ_σ ⟨a†_{i1σ1} .. a†_{ikσk} a_{j1σ1} .. a_{jkσk}⟩
//   spin-orbital  Γ[p1..pk, q1..qk] = ⟨a†_p1 .. a†_pk a_q1 .. a_qk⟩,  p = 2·orbital + (0 alpha, 1 beta)
// The annihilators appear in the same order as the creators, so the 2-RDM is
// ⟨a†_i a†_j a_k a_l⟩ and Σ_ij Γ[i,j,i,j] = -n(n-1).

namespace fqe {

enum class RdmFlavor { spin_summed, spin_orbital };
enum class RdmKind { particle, hole };
enum class RdmRoute { knowles_handy, harrison_zarrabian };

inline const char* to_string(RdmFlavor f) { return f == RdmFlavor::spin_summed ? "spin_summed" : "spin_orbital"; }
inline const char* to_string(RdmRoute r) {
  return r == RdmRoute::knowles_handy ? "knowles_handy" : "harrison_zarrabian";
}

struct RdmTensor {
  int order = 0;
  RdmFlavor flavor = RdmFlavor::spin_summed;
  RdmKind kind = RdmKind::particle;
  int norb = 0;
  Tensor data;

  std::size_t extent() const { return flavor == RdmFlavor::spin_summed ? norb : 2 * norb; }
};

struct RdmOptions {
  std::optional<RdmRoute> force;
  double filling_threshold = kDefaultFillingThreshold;
  std::function<void(const SectorKey&, RdmRoute)> on_dispatch;
};

inline constexpr int kMaxOrder4Orbitals = 8;

namespace detail {

inline std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

inline RdmTensor make_rdm(int order, RdmFlavor flavor, RdmKind kind, int m) {
  RdmTensor r{order, flavor, kind, m, {}};
  r.data = Tensor(std::vector<std::size_t>(static_cast<std::size_t>(2 * order), r.extent()));
  return r;
}

inline void check_order(int order, RdmFlavor flavor, int m) {
  const int max_order = flavor == RdmFlavor::spin_summed ? 4 : 3;
  if (order < 1 || order > max_order)
    throw DomainError(std::string("unsupported RDM order ") + std::to_string(order) + " for flavor " +
                      to_string(flavor));
  if (order == 4 && m > kMaxOrder4Orbitals)
    throw ResourceError("order-4 RDM refused for m=" + std::to_string(m) + " (limit " +
                        std::to_string(kMaxOrder4Orbitals) + ")");
}

/// Reverses the k base-`base` digits of idx.
inline std::size_t reverse_digits(std::size_t idx, std::size_t base, int k) {
  std::size_t r = 0;
  for (int t = 0; t < k; ++t) {
    r = r * base + idx % base;
    idx /= base;
  }
  return r;
}

// --- Knowles-Handy route -------------------------------------------------

/// e_j[p1..pj] = ⟨E_p1 .. E_pj⟩ for j = 1..k over one sector, pair p = i*m + j,
/// tuples flattened with p1 most significant.
inline std::vector<std::vector<cd>> e_products(const Sector& sec, int k) {
  const int m = sec.graph->norb();
  const auto m2 = static_cast<Eigen::Index>(m * m);
  auto swap_pair = [m](Eigen::Index p) { return (p % m) * m + p / m; };
  std::vector<std::vector<cd>> e(static_cast<std::size_t>(k + 1));
  const CMatrix c = Eigen::Map<const CMatrix>(sec.coeff.data(), sec.coeff.size(), 1);
  const CMatrix d = one_body_transition(*sec.graph, c);
  {
    const CMatrix e1 = c.adjoint() * d;
    e[1].assign(e1.data(), e1.data() + e1.size());
  }
  if (k >= 2) {
    const CMatrix g = d.adjoint() * d;  // g[a, b] = Σ conj(D_a) D_b
    e[2].resize(static_cast<std::size_t>(m2 * m2));
    for (Eigen::Index p1 = 0; p1 < m2; ++p1)
      for (Eigen::Index p2 = 0; p2 < m2; ++p2) e[2][static_cast<std::size_t>(p1 * m2 + p2)] = g(swap_pair(p1), p2);
  }
  if (k >= 3) {
    const CMatrix ee = one_body_transition(*sec.graph, d);  // ⟨K|E_cd E_ef|Ψ⟩
    const CMatrix g3 = d.adjoint() * ee;
    const auto m4 = m2 * m2;
    e[3].resize(static_cast<std::size_t>(m2 * m4));
    for (Eigen::Index p1 = 0; p1 < m2; ++p1)
      for (Eigen::Index q = 0; q < m4; ++q) e[3][static_cast<std::size_t>(p1 * m4 + q)] = g3(swap_pair(p1), q);
    if (k >= 4) {
      const CMatrix g4 = ee.adjoint() * ee;
      e[4].resize(static_cast<std::size_t>(m4 * m4));
      for (Eigen::Index p1 = 0; p1 < m2; ++p1)
        for (Eigen::Index p2 = 0; p2 < m2; ++p2) {
          const Eigen::Index row = swap_pair(p2) * m2 + swap_pair(p1);
          for (Eigen::Index q = 0; q < m4; ++q)
            e[4][static_cast<std::size_t>((p1 * m2 + p2) * m4 + q)] = g4(row, q);
        }
    }
  }
  return e;
}

/// Converts products of E operators into the nested normal-ordered expectation
///   N[p1..pk] = Σ_σ ⟨a†_{i1} .. a†_{ik} a_{jk} .. a_{j1}⟩
/// using E_{i1j1} N(p2..pk) = N(p1..pk) + Σ_t δ(j1, i_t) N(p2..pk with i_t → i1).
/// M_j^{(r)}[p] = ⟨E_p1 .. E_pr N(p_{r+1}..p_j)⟩ is filled from r = j down to 0.
inline std::vector<cd> normal_ordered(const std::vector<std::vector<cd>>& e, int m, int k) {
  const std::size_t m2 = static_cast<std::size_t>(m) * m;
  std::vector<std::vector<std::vector<cd>>> table(static_cast<std::size_t>(k + 1));
  std::vector<cd> cur;
  for (int j = 1; j <= k; ++j) {
    cur = e[static_cast<std::size_t>(j)];
    auto& level = table[static_cast<std::size_t>(j)];
    if (j < k) level.assign(static_cast<std::size_t>(j + 1), {});
    if (j < k) level[static_cast<std::size_t>(j)] = cur;
    if (j < k && j >= 1) level[static_cast<std::size_t>(j - 1)] = cur;
    std::vector<std::size_t> p(static_cast<std::size_t>(j));
    for (int r = j - 2; r >= 0; --r) {
      const auto& lower = table[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(r)];
      for (std::size_t idx = 0; idx < cur.size(); ++idx) {
        std::size_t x = idx;
        for (int t = j - 1; t >= 0; --t) {
          p[static_cast<std::size_t>(t)] = x % m2;
          x /= m2;
        }
        const std::size_t ir = p[static_cast<std::size_t>(r)] / m;
        const std::size_t jr = p[static_cast<std::size_t>(r)] % m;
        for (int t = r + 1; t < j; ++t) {
          if (p[static_cast<std::size_t>(t)] / m != jr) continue;
          std::size_t q = 0;
          for (int u = 0; u < j; ++u) {
            if (u == r) continue;
            std::size_t pu = p[static_cast<std::size_t>(u)];
            if (u == t) pu = ir * m + pu % m;
            q = q * m2 + pu;
          }
          cur[idx] -= lower[q];
        }
      }
      if (j < k) level[static_cast<std::size_t>(r)] = cur;
    }
  }
  return cur;
}

inline void add_kh_sector(const Sector& sec, int k, Tensor& out) {
  const int m = sec.graph->norb();
  const auto e = e_products(sec, k);
  const auto n = normal_ordered(e, m, k);
  const double sign = ((k * (k - 1) / 2) % 2) ? -1.0 : 1.0;
  const std::size_t m2 = static_cast<std::size_t>(m) * m;
  const std::size_t mk = ipow(static_cast<std::size_t>(m), k);
  std::vector<std::size_t> p(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < n.size(); ++idx) {
    std::size_t x = idx;
    for (int t = k - 1; t >= 0; --t) {
      p[static_cast<std::size_t>(t)] = x % m2;
      x /= m2;
    }
    std::size_t ii = 0, jj = 0;
    for (int t = 0; t < k; ++t) {
      ii = ii * m + p[static_cast<std::size_t>(t)] / m;
      jj = jj * m + p[static_cast<std::size_t>(t)] % m;
    }
    out.data[ii * mk + jj] += sign * n[idx];
  }
}

// --- annihilation-amplitude route --------------------------------------

template <class F>
void for_each_creation_chain(const SpaceTable& t, const DetRef& d, std::span<const Spin> pattern, std::size_t pos,
                             std::size_t idx, int sign, F& f) {
  if (pos == pattern.size()) {
    f(idx, d, sign);
    return;
  }
  const auto m = static_cast<std::size_t>(t.norb());
  for_each_creation(t, d, pattern[pos], [&](int orb, const DetRef& nd, int s) {
    for_each_creation_chain(t, nd, pattern, pos + 1, idx * m + static_cast<std::size_t>(orb), sign * s, f);
  });
}

/// A^L[q1..qk] = ⟨L| a_{q1σ1} .. a_{qkσk} |Ψ_sector⟩ with spins `pattern`, built from each L by
/// creating q1 first; rows run over the L sector (L_alpha major), columns over q1..qk base m.
/// Returns nullopt when the sector has too few electrons for the pattern.
struct Amplitudes {
  SectorKey l_key;
  CMatrix a;
};

inline std::optional<Amplitudes> annihilation_amplitudes(const Sector& sec, std::span<const Spin> pattern,
                                                         const SpaceTable& spaces) {
  int ca = 0, cb = 0;
  for (Spin s : pattern) (s == Spin::alpha ? ca : cb) += 1;
  const int la = sec.n_alpha() - ca;
  const int lb = sec.n_beta() - cb;
  if (la < 0 || lb < 0) return std::nullopt;
  const int m = spaces.norb();
  const std::size_t dla = spaces(la).size();
  const std::size_t dlb = spaces(lb).size();
  const std::size_t db = sec.graph->dim_beta();
  const auto k = static_cast<int>(pattern.size());
  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(dla * dlb),
                            static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(m), k)));
  const cd* c = sec.coeff.data();
  parallel_for(0, dla, [&](std::size_t lia) {
    for (std::size_t lib = 0; lib < dlb; ++lib) {
      const auto row = static_cast<Eigen::Index>(lia * dlb + lib);
      const DetRef l{static_cast<std::uint32_t>(lia), static_cast<std::uint32_t>(lib), la, lb};
      auto f = [&](std::size_t idx, const DetRef& i, int sign) {
        a(row, static_cast<Eigen::Index>(idx)) += static_cast<double>(sign) * c[i.ia * db + i.ib];
      };
      for_each_creation_chain(spaces, l, pattern, 0, 0, 1, f);
    }
  });
  return Amplitudes{SectorKey::from_counts(la, lb), std::move(a)};
}

inline std::vector<std::vector<Spin>> spin_patterns(int k) {
  std::vector<std::vector<Spin>> out;
  for (int mask = 0; mask < (1 << k); ++mask) {
    std::vector<Spin> p(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) p[static_cast<std::size_t>(t)] = ((mask >> (k - 1 - t)) & 1) ? Spin::beta : Spin::alpha;
    out.push_back(std::move(p));
  }
  return out;
}

inline int pattern_id(std::span<const Spin> p) {
  int id = 0;
  for (Spin s : p) id = id * 2 + static_cast<int>(s);
  return id;
}

inline std::vector<Spin> reversed(std::vector<Spin> p) {
  std::reverse(p.begin(), p.end());
  return p;
}

inline void add_amplitude_sector(const Sector& sec, int k, const SpaceTable& spaces, Tensor& out) {
  const auto m = static_cast<std::size_t>(spaces.norb());
  const std::size_t mk = ipow(m, k);
  const auto patterns = spin_patterns(k);
  std::map<int, Amplitudes> amps;
  for (const auto& p : patterns)
    if (auto a = annihilation_amplitudes(sec, p, spaces)) amps.emplace(pattern_id(p), std::move(*a));
  for (const auto& p : patterns) {
    const auto ket = amps.find(pattern_id(p));
    const auto bra = amps.find(pattern_id(reversed(p)));
    if (ket == amps.end() || bra == amps.end()) continue;
    const CMatrix g = bra->second.a.adjoint() * ket->second.a;
    for (std::size_t i = 0; i < mk; ++i) {
      const auto gi = static_cast<Eigen::Index>(reverse_digits(i, m, k));
      for (std::size_t j = 0; j < mk; ++j) out.data[i * mk + j] += g(gi, static_cast<Eigen::Index>(j));
    }
  }
}

/// Spin-orbital transition tensor ⟨bra| a†_p1..a†_pk a_q1..a_qk |ket⟩ over all sectors, via
/// Σ_L conj(⟨L|a_pk..a_p1|bra⟩) ⟨L|a_q1..a_qk|ket⟩.
inline Tensor transition_spin_orbital(const Wavefunction& bra, const Wavefunction& ket, int k) {
  const int m = ket.norb();
  if (bra.norb() != m) throw DomainError("transition RDM: orbital count mismatch");
  SpaceTable spaces(m);
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t so = 2 * mm;
  const std::size_t sok = ipow(so, k);
  const std::size_t mk = ipow(mm, k);
  Tensor out(std::vector<std::size_t>(static_cast<std::size_t>(2 * k), so));
  const auto patterns = spin_patterns(k);
  using Key = std::pair<SectorKey, int>;  // (L sector, spin pattern)
  auto collect = [&](const Wavefunction& w) {
    std::map<Key, CMatrix> amps;
    for (const auto& [key, sec] : w.sectors())
      for (const auto& p : patterns)
        if (auto a = annihilation_amplitudes(sec, p, spaces)) amps.emplace(Key{a->l_key, pattern_id(p)}, std::move(a->a));
    return amps;
  };
  const auto kets = collect(ket);
  const auto bras = &bra == &ket ? kets : collect(bra);
  // spin-orbital index of the t-th digit (0 = most significant) of an orbital tuple
  auto so_index = [&](std::size_t orbs, int pid) {
    std::size_t r = 0;
    for (int t = 0; t < k; ++t) {
      const std::size_t orb = (orbs / ipow(mm, k - 1 - t)) % mm;
      const std::size_t spin = static_cast<std::size_t>((pid >> (k - 1 - t)) & 1);
      r = r * so + 2 * orb + spin;
    }
    return r;
  };
  for (const auto& [bkey, ba] : bras)
    for (const auto& [kkey, ka] : kets) {
      if (bkey.first != kkey.first) continue;
      const CMatrix g = ba.adjoint() * ka;
      // bra amplitudes are indexed by (pk..p1) with pattern reversed
      std::vector<Spin> bp(static_cast<std::size_t>(k));
      for (int t = 0; t < k; ++t) bp[static_cast<std::size_t>(t)] = ((bkey.second >> (k - 1 - t)) & 1) ? Spin::beta : Spin::alpha;
      const int p_pid = pattern_id(reversed(bp));
      for (std::size_t i = 0; i < mk; ++i) {
        const auto gi = static_cast<Eigen::Index>(reverse_digits(i, mm, k));
        const std::size_t row = so_index(i, p_pid);
        for (std::size_t j = 0; j < mk; ++j)
          out.data[row * sok + so_index(j, kkey.second)] += g(gi, static_cast<Eigen::Index>(j));
      }
    }
  return out;
}

inline RdmRoute select_rdm_route(const SectorKey& key, int m, const RdmOptions& opts) {
  if (opts.force) return *opts.force;
  return static_cast<double>(key.n) / (2.0 * m) < opts.filling_threshold ? RdmRoute::harrison_zarrabian
                                                                         : RdmRoute::knowles_handy;
}

}  // namespace detail

/// Particle RDM of the given order. Spin-summed sectors are independent (cross terms between
/// sectors vanish); spin-orbital tensors include cross-sector terms of equal particle number.
inline RdmTensor compute_rdm(const Wavefunction& w, int order, RdmFlavor flavor, const RdmOptions& opts = {}) {
  const int m = w.norb();
  detail::check_order(order, flavor, m);
  if (flavor == RdmFlavor::spin_orbital) {
    RdmTensor r{order, flavor, RdmKind::particle, m, detail::transition_spin_orbital(w, w, order)};
    return r;
  }
  RdmTensor r = detail::make_rdm(order, flavor, RdmKind::particle, m);
  std::optional<SpaceTable> spaces;
  for (const auto& [key, sec] : w.sectors()) {
    const RdmRoute route = detail::select_rdm_route(key, m, opts);
    if (opts.on_dispatch) opts.on_dispatch(key, route);
    if (route == RdmRoute::knowles_handy) {
      detail::add_kh_sector(sec, order, r.data);
    } else {
      if (!spaces) spaces.emplace(m);
      detail::add_amplitude_sector(sec, order, *spaces, r.data);
    }
  }
  return r;
}

/// Hole RDMs from particle RDMs:
///   spin-orbital  Γʰ[p,q] = ⟨a_p a†_q⟩ = δ_pq - Γ[q,p]
///                 Γʰ[p,q,r,s] = ⟨a_p a_q a†_r a†_s⟩
///                   = δ_qr δ_ps - δ_pr δ_qs - δ_qr Γ[s,p] + δ_pr Γ[s,q] + δ_qs Γ[r,p] - δ_ps Γ[r,q] + Γ[r,s,p,q]
///   spin-summed   Γʰ[i,j] = 2δ_ij - Γ[j,i]
///                 Γʰ[i,j,k,l] = Γ[k,l,i,j] + 2δ_ik Γ[l,j] + 2δ_jl Γ[k,i] - δ_jk Γ[l,i] - δ_il Γ[k,j]
///                               + 2δ_jk δ_il - 4δ_ik δ_jl
inline RdmTensor hole_rdm(const Wavefunction& w, int order, RdmFlavor flavor, const RdmOptions& opts = {}) {
  if (order < 1 || order > 2) throw DomainError("hole RDM order " + std::to_string(order) + " is not supported");
  const int m = w.norb();
  const auto g1 = compute_rdm(w, 1, flavor, opts);
  RdmTensor h = detail::make_rdm(order, flavor, RdmKind::hole, m);
  const std::size_t n = h.extent();
  const double two = flavor == RdmFlavor::spin_summed ? 2.0 : 1.0;
  auto d = [](std::size_t a, std::size_t b) { return a == b ? 1.0 : 0.0; };
  auto G1 = [&](std::size_t a, std::size_t b) { return g1.data.data[a * n + b]; };
  if (order == 1) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) h.data.data[i * n + j] = two * d(i, j) - G1(j, i);
    return h;
  }
  const auto g2 = compute_rdm(w, 2, flavor, opts);
  auto G2 = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t e) {
    return g2.data.data[((a * n + b) * n + c) * n + e];
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          cd v;
          if (flavor == RdmFlavor::spin_summed) {
            v = G2(k, l, i, j) + 2.0 * d(i, k) * G1(l, j) + 2.0 * d(j, l) * G1(k, i) - d(j, k) * G1(l, i) -
                d(i, l) * G1(k, j) + 2.0 * d(j, k) * d(i, l) - 4.0 * d(i, k) * d(j, l);
          } else {
            v = d(j, k) * d(i, l) - d(i, k) * d(j, l) - d(j, k) * G1(l, i) + d(i, k) * G1(l, j) +
                d(j, l) * G1(k, i) - d(i, l) * G1(k, j) + G2(k, l, i, j);
          }
          h.data.data[((i * n + j) * n + k) * n + l] = v;
        }
  return h;
}

/// Σ_P Γ[P, reversed P], i.e. the expectation of the normal-ordered product of the k number
/// operators: n(n-1)..(n-k+1) for particle tensors of an n-electron state.
inline cd rdm_trace(const RdmTensor& r) {
  const std::size_t n = r.extent();
  const std::size_t count = detail::ipow(n, r.order);
  cd t = 0.0;
  for (std::size_t i = 0; i < count; ++i) t += r.data.data[i * count + detail::reverse_digits(i, n, r.order)];
  return t;
}

/// max |Γ[P,Q] - conj Γ[rev Q, rev P]|, zero for an exact density matrix.
inline double rdm_hermiticity_residual(const RdmTensor& r) {
  const std::size_t n = r.extent();
  const std::size_t count = detail::ipow(n, r.order);
  double res = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      const cd a = r.data.data[i * count + j];
      const cd b = r.data.data[detail::reverse_digits(j, n, r.order) * count + detail::reverse_digits(i, n, r.order)];
      res = std::max(res, std::abs(a - std::conj(b)));
    }
  return res;
}

/// ⟨w|Ô|w⟩ term by term. Terms whose target sector is absent contribute zero.
inline cd expectation(const Wavefunction& w, const FermionOperator& op) {
  cd total = 0.0;
  for (const auto& t : op.terms) total += inner_product(w, apply_term(t, w, MissingSector::drop));
  return total;
}

inline cd expectation(const Wavefunction& w, std::string_view text) {
  return expectation(w, parse_operator_string(text));
}

inline cd expectation(const Wavefunction& w, const Hamiltonian& h) { return inner_product(w, apply(h, w)); }

/// g[p,q,r,s] = ⟨Ψ|[Ĥ, a†_p a†_q a_r a_s]|Ψ⟩ over spin-orbital indices, from the transition
/// tensors ⟨ĤΨ|a†a†aa|Ψ⟩ - ⟨Ψ|a†a†aa|ĤΨ⟩.
inline Tensor two_body_gradient(const Wavefunction& w, const Hamiltonian& h) {
  const Wavefunction hw = apply(h, w);
  Tensor g = detail::transition_spin_orbital(hw, w, 2);
  const Tensor b = detail::transition_spin_orbital(w, hw, 2);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] -= b.data[i];
  return g;
}

}  // namespace fqe
