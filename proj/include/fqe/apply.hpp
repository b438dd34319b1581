#pragma once

#include <array>
#include <bit>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fqe/error.hpp"
#include "fqe/fci_graph.hpp"
#include "fqe/operators.hpp"
#include "fqe/parallel.hpp"
#include "fqe/wavefunction.hpp"

namespace fqe {

// ---------------------------------------------------------------------------
// Determinant-level ladder algebra under the alpha-block-first convention.

/// Applies op to the determinant (alpha, beta) in place. Returns false if the result is zero.
inline bool apply_ladder(const LadderOp& op, bits_t& alpha, bits_t& beta, int& sign) {
  bits_t& target = op.spin == Spin::alpha ? alpha : beta;
  const bits_t mask = bits_t{1} << op.orbital;
  const bool occ = (target & mask) != 0;
  if (op.is_create() == occ) return false;
  sign *= parity_below(target, op.orbital);
  if (op.spin == Spin::beta && (popcount(alpha) & 1)) sign = -sign;
  target ^= mask;
  return true;
}

/// Applies the operator string right to left.
inline bool apply_ops(std::span<const LadderOp> ops, bits_t& alpha, bits_t& beta, int& sign) {
  for (auto it = ops.rbegin(); it != ops.rend(); ++it)
    if (!apply_ladder(*it, alpha, beta, sign)) return false;
  return true;
}

enum class MissingSector { error, drop };

namespace detail {

inline void check_term_orbitals(const ExcitationTerm& term, int m) {
  if (term.max_orbital() >= m)
    throw DomainError("operator term " + to_string(term) + " refers to orbital " +
                      std::to_string(term.max_orbital()) + " but the wavefunction has m=" +
                      std::to_string(m));
}

/// Target sector of a sector-changing term, or nullopt when no determinant survives.
inline std::optional<SectorKey> target_sector(const SectorKey& from, std::pair<int, int> delta, int m) {
  const int na = from.n_alpha() + delta.first;
  const int nb = from.n_beta() + delta.second;
  if (na < 0 || nb < 0 || na > m || nb > m) return std::nullopt;
  return SectorKey::from_counts(na, nb);
}

}  // namespace detail

/// ĝ|w⟩ for one excitation term. Sector-changing terms write into the matching
/// sectors of the result, which has the same sector layout as w.
inline Wavefunction apply_term(const ExcitationTerm& term, const Wavefunction& w,
                               MissingSector missing = MissingSector::error) {
  detail::check_term_orbitals(term, w.norb());
  Wavefunction out = w.zeros_like();
  if (term.is_nilpotent() || term.coefficient == cd{0.0, 0.0}) return out;
  const int m = w.norb();
  const auto delta = term.particle_change();

  for (const auto& [key, sec] : w.sectors()) {
    const auto tkey = detail::target_sector(key, delta, m);
    if (!tkey) continue;
    if (!out.has_sector(*tkey)) {
      if (missing == MissingSector::drop) continue;
      throw DomainError("apply_term: target sector " + to_string(*tkey) + " of " + to_string(term) +
                        " is absent from the wavefunction");
    }
    auto& dst = out.sector(*tkey).coeff;

    // number-conserving single excitation: precomputed string maps
    if (term.ops.size() == 2 && term.ops[0].is_create() && !term.ops[1].is_create() &&
        term.ops[0].spin == term.ops[1].spin) {
      const Spin s = term.ops[0].spin;
      const auto& links = sec.graph->excitation_map(term.ops[0].orbital, term.ops[1].orbital, s);
      for (const auto& l : links) {
        const cd f = term.coefficient * static_cast<double>(l.parity);
        if (s == Spin::alpha)
          dst.row(l.target) += f * sec.coeff.row(l.source);
        else
          dst.col(l.target) += f * sec.coeff.col(l.source);
      }
      continue;
    }

    // single creation / annihilation: cross-sector link maps
    if (term.ops.size() == 1) {
      const auto& op = term.ops[0];
      const std::array<SectorTriple, 2> pair{SectorTriple{key.n, key.sz, m},
                                             SectorTriple{tkey->n, tkey->sz, m}};
      const FciGraphSet set = build_fci_graph_set(pair);
      const auto* links = set.find({key, *tkey, op.orbital, op.spin, op.kind});
      if (links) {
        for (const auto& l : *links) {
          const cd f = term.coefficient * static_cast<double>(l.parity);
          if (op.spin == Spin::alpha)
            dst.row(l.target) += f * sec.coeff.row(l.source);
          else
            dst.col(l.target) += f * sec.coeff.col(l.source);
        }
      }
      continue;
    }

    // general operator string, determinant by determinant
    const auto& sa = sec.graph->alpha();
    const auto& sb = sec.graph->beta();
    const auto& tgraph = *out.sector(*tkey).graph;
    for (std::size_t ia = 0; ia < sa.size(); ++ia)
      for (std::size_t ib = 0; ib < sb.size(); ++ib) {
        const cd c = sec.coeff(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib));
        if (c == cd{0.0, 0.0}) continue;
        bits_t a = sa.string(ia);
        bits_t b = sb.string(ib);
        int sign = 1;
        if (!apply_ops(term.ops, a, b, sign)) continue;
        dst(static_cast<Eigen::Index>(tgraph.index_alpha(a)),
            static_cast<Eigen::Index>(tgraph.index_beta(b))) +=
            term.coefficient * static_cast<double>(sign) * c;
      }
  }
  return out;
}

/// Σ_k ĝ_k|w⟩.
inline Wavefunction apply_operator(const FermionOperator& op, const Wavefunction& w,
                                   MissingSector missing = MissingSector::error) {
  Wavefunction out = w.zeros_like();
  for (const auto& t : op.terms) out.axpy(1.0, apply_term(t, w, missing));
  return out;
}

// ---------------------------------------------------------------------------
// One-body machinery on a single sector. Determinants are flattened as
// I = I_alpha * dim_beta + I_beta.

enum class Channels { alpha, beta, both };

namespace detail {
inline bool use_alpha(Channels c) { return c != Channels::beta; }
inline bool use_beta(Channels c) { return c != Channels::alpha; }

inline Eigen::Map<const CVector> flat(const CMatrix& c) { return {c.data(), c.size()}; }
}  // namespace detail

/// Y[K, (y*m + x)*ncols + c] = Σ_J ⟨K| E_yx |J⟩ X[J, c], with E restricted to `channels`.
/// X = C (ncols = 1) gives the D intermediate; X = D (ncols = m²) gives the E intermediate.
inline CMatrix one_body_transition(const FciGraph& g, const CMatrix& x,
                                   Channels channels = Channels::both) {
  const auto m = static_cast<std::size_t>(g.norb());
  const std::size_t da = g.dim_alpha();
  const std::size_t db = g.dim_beta();
  const auto ncols = static_cast<std::size_t>(x.cols());
  CMatrix y = CMatrix::Zero(x.rows(), static_cast<Eigen::Index>(m * m * ncols));
  parallel_for(0, da, [&](std::size_t ka) {
    if (detail::use_alpha(channels))
      for (const auto& e : g.alpha().excitations(ka)) {
        // ⟨ka| a†_annihilate a_create |target⟩ = parity
        const std::size_t col0 = (e.annihilate * m + e.create) * ncols;
        const double s = e.parity;
        for (std::size_t kb = 0; kb < db; ++kb) {
          const auto row = static_cast<Eigen::Index>(ka * db + kb);
          const auto src = static_cast<Eigen::Index>(e.target * db + kb);
          for (std::size_t c = 0; c < ncols; ++c)
            y(row, static_cast<Eigen::Index>(col0 + c)) += s * x(src, static_cast<Eigen::Index>(c));
        }
      }
    if (detail::use_beta(channels))
      for (std::size_t kb = 0; kb < db; ++kb) {
        const auto row = static_cast<Eigen::Index>(ka * db + kb);
        for (const auto& e : g.beta().excitations(kb)) {
          const std::size_t col0 = (e.annihilate * m + e.create) * ncols;
          const double s = e.parity;
          const auto src = static_cast<Eigen::Index>(ka * db + e.target);
          for (std::size_t c = 0; c < ncols; ++c)
            y(row, static_cast<Eigen::Index>(col0 + c)) += s * x(src, static_cast<Eigen::Index>(c));
        }
      }
  });
  return y;
}

/// R[I, c] = Σ_ik Σ_K ⟨I| E_ik |K⟩ Y[K, (i*m + k)*ncols + c].
inline CMatrix one_body_contract(const FciGraph& g, const CMatrix& y, std::size_t ncols,
                                 Channels channels = Channels::both) {
  const auto m = static_cast<std::size_t>(g.norb());
  const std::size_t da = g.dim_alpha();
  const std::size_t db = g.dim_beta();
  CMatrix r = CMatrix::Zero(y.rows(), static_cast<Eigen::Index>(ncols));
  parallel_for(0, da, [&](std::size_t ia) {
    for (std::size_t ib = 0; ib < db; ++ib) {
      const auto row = static_cast<Eigen::Index>(ia * db + ib);
      if (detail::use_alpha(channels))
        for (const auto& e : g.alpha().excitations(ia)) {
          const std::size_t col0 = (e.annihilate * m + e.create) * ncols;
          const auto src = static_cast<Eigen::Index>(e.target * db + ib);
          for (std::size_t c = 0; c < ncols; ++c)
            r(row, static_cast<Eigen::Index>(c)) +=
                static_cast<double>(e.parity) * y(src, static_cast<Eigen::Index>(col0 + c));
        }
      if (detail::use_beta(channels))
        for (const auto& e : g.beta().excitations(ib)) {
          const std::size_t col0 = (e.annihilate * m + e.create) * ncols;
          const auto src = static_cast<Eigen::Index>(ia * db + e.target);
          for (std::size_t c = 0; c < ncols; ++c)
            r(row, static_cast<Eigen::Index>(c)) +=
                static_cast<double>(e.parity) * y(src, static_cast<Eigen::Index>(col0 + c));
        }
    }
  });
  return r;
}

/// Σ_ik h_ik E_ik applied to one sector's coefficients.
inline CMatrix apply_one_body(const CMatrix& h, const Sector& sec, Channels channels = Channels::both) {
  const auto& g = *sec.graph;
  const std::size_t da = g.dim_alpha();
  const std::size_t db = g.dim_beta();
  CMatrix out = CMatrix::Zero(sec.coeff.rows(), sec.coeff.cols());
  parallel_for(0, da, [&](std::size_t ia) {
    const auto r = static_cast<Eigen::Index>(ia);
    if (detail::use_alpha(channels))
      for (const auto& e : g.alpha().excitations(ia)) {
        const cd f = h(e.annihilate, e.create) * static_cast<double>(e.parity);
        if (f != cd{0.0, 0.0}) out.row(r) += f * sec.coeff.row(e.target);
      }
    if (detail::use_beta(channels))
      for (std::size_t ib = 0; ib < db; ++ib) {
        cd acc = 0.0;
        for (const auto& e : g.beta().excitations(ib))
          acc += h(e.annihilate, e.create) * static_cast<double>(e.parity) *
                 sec.coeff(r, static_cast<Eigen::Index>(e.target));
        out(r, static_cast<Eigen::Index>(ib)) += acc;
      }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Intermediates

/// D^{IαIβ}_ij = Σ_J Σ_σ ⟨I| a†_iσ a_jσ |J⟩ C_J, stored as (dimα·dimβ) × m² with column i*m + j.
struct IntermediateD {
  SectorKey key;
  int m = 0;
  CMatrix d;
};

inline IntermediateD build_d_intermediate(const Wavefunction& w, const SectorKey& key,
                                          Channels channels = Channels::both) {
  const auto& sec = w.sector(key);
  CMatrix c = detail::flat(sec.coeff);
  return {key, w.norb(), one_body_transition(*sec.graph, c, channels)};
}

/// E^K_{ij,kl} = Σ_J ⟨K| E_ij |J⟩ D^J_kl, stored as ndet × m⁴ with column (i*m + j)*m² + (k*m + l).
inline CMatrix build_e_intermediate(const FciGraph& g, const CMatrix& d,
                                    Channels channels = Channels::both) {
  return one_body_transition(g, d, channels);
}

/// Precomputed string spaces for every electron count of one orbital set.
class SpaceTable {
 public:
  explicit SpaceTable(int m) : m_(m) {
    for (int n = 0; n <= m; ++n) spaces_.push_back(string_space(m, n));
  }
  const StringSpace& operator()(int n) const { return *spaces_[static_cast<std::size_t>(n)]; }
  int norb() const { return m_; }

 private:
  int m_;
  std::vector<std::shared_ptr<const StringSpace>> spaces_;
};

/// A determinant addressed by string indices inside the spaces of its electron counts.
struct DetRef {
  std::uint32_t ia;
  std::uint32_t ib;
  int na;
  int nb;
};

namespace detail {
template <class F>
void for_each_creation(const SpaceTable& t, const DetRef& d, Spin s, F&& f) {
  if (s == Spin::alpha) {
    for (const auto& l : t(d.na).creations(d.ia)) f(l.orbital, DetRef{l.target, d.ib, d.na + 1, d.nb}, l.parity);
  } else {
    const int extra = (d.na & 1) ? -1 : 1;
    for (const auto& l : t(d.nb).creations(d.ib))
      f(l.orbital, DetRef{d.ia, l.target, d.na, d.nb + 1}, l.parity * extra);
  }
}

template <class F>
void for_each_annihilation(const SpaceTable& t, const DetRef& d, Spin s, F&& f) {
  if (s == Spin::alpha) {
    for (const auto& l : t(d.na).annihilations(d.ia))
      f(l.orbital, DetRef{l.target, d.ib, d.na - 1, d.nb}, l.parity);
  } else {
    const int extra = (d.na & 1) ? -1 : 1;
    for (const auto& l : t(d.nb).annihilations(d.ib))
      f(l.orbital, DetRef{d.ia, l.target, d.na, d.nb - 1}, l.parity * extra);
  }
}

inline int count(Spin s, Spin a, Spin b) { return (a == s ? 1 : 0) + (b == s ? 1 : 0); }
}  // namespace detail

/// F^L_{kl,σρ} = ⟨L| a_kσ a_lρ |Ψ⟩ over the (n-2)-electron determinants L reached by
/// removing one σ and one ρ electron. Stored as (dimLα·dimLβ) × m², column k*m + l.
struct IntermediateF {
  SectorKey key;
  Spin sigma;
  Spin rho;
  int l_alpha = 0;  // electron counts of the L space
  int l_beta = 0;
  CMatrix f;
};

inline std::optional<IntermediateF> build_f_intermediate(const Sector& sec, int m, Spin sigma, Spin rho,
                                                         const SpaceTable& spaces) {
  const int la = sec.n_alpha() - detail::count(Spin::alpha, sigma, rho);
  const int lb = sec.n_beta() - detail::count(Spin::beta, sigma, rho);
  if (la < 0 || lb < 0) return std::nullopt;
  const auto& sla = spaces(la);
  const auto& slb = spaces(lb);
  const std::size_t dla = sla.size();
  const std::size_t dlb = slb.size();
  const std::size_t db = sec.graph->dim_beta();
  const auto mm = static_cast<std::size_t>(m);
  CMatrix f = CMatrix::Zero(static_cast<Eigen::Index>(dla * dlb), static_cast<Eigen::Index>(mm * mm));
  const cd* c = sec.coeff.data();
  parallel_for(0, dla, [&](std::size_t lia) {
    for (std::size_t lib = 0; lib < dlb; ++lib) {
      const auto row = static_cast<Eigen::Index>(lia * dlb + lib);
      const DetRef l{static_cast<std::uint32_t>(lia), static_cast<std::uint32_t>(lib), la, lb};
      // ⟨L| a_kσ a_lρ |I⟩ = ⟨I| a†_lρ a†_kσ |L⟩
      detail::for_each_creation(spaces, l, sigma, [&](int k, const DetRef& mid, int s1) {
        detail::for_each_creation(spaces, mid, rho, [&](int lo, const DetRef& i, int s2) {
          f(row, static_cast<Eigen::Index>(k * mm + lo)) +=
              static_cast<double>(s1 * s2) * c[i.ia * db + i.ib];
        });
      });
    }
  });
  return IntermediateF{sec.key, sigma, rho, la, lb, std::move(f)};
}

inline IntermediateF build_f_intermediate(const Wavefunction& w, const SectorKey& key, Spin sigma,
                                          Spin rho) {
  SpaceTable spaces(w.norb());
  auto f = build_f_intermediate(w.sector(key), w.norb(), sigma, rho, spaces);
  if (!f) throw DomainError("build_f_intermediate: sector " + to_string(key) +
                            " has too few electrons for channels (" + to_string(sigma) + ", " +
                            to_string(rho) + ")");
  return std::move(*f);
}

// ---------------------------------------------------------------------------
// Dense spin-free Hamiltonians

namespace detail {

inline void check_restricted(const RestrictedHamiltonian& h, int m) {
  if (h.h1.rows() != m || h.h1.cols() != m || h.v2.m != m)
    throw DomainError("Hamiltonian has " + std::to_string(h.h1.rows()) +
                      " orbitals but the wavefunction has m=" + std::to_string(m));
}

/// mat[(a*m + b), (c*m + d)] = V(perm)
template <class Index>
CMatrix reshape_v(const Tensor4& v, Index&& index) {
  const int m = v.m;
  CMatrix mat(m * m, m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) mat(a * m + b, c * m + d) = index(a, b, c, d);
  return mat;
}

/// h_il + Σ_k V_ikkl from reordering a†_iσ a†_jρ a_kσ a_lρ = δ_jk δ_σρ a†_iσ a_lρ - E_ik E_jl.
inline CMatrix corrected_one_body(const CMatrix& h1, const Tensor4& v) {
  CMatrix h = h1;
  const int m = v.m;
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k) h(i, l) += v(i, k, k, l);
  return h;
}

}  // namespace detail

/// Knowles-Handy: D from the coefficients, D̃ = D·V as one GEMM over the combined (jl)
/// index, then R = -Σ ⟨I|E_ik|K⟩ D̃^K_ik plus the reordered one-body term.
inline CMatrix apply_kh_sector(const RestrictedHamiltonian& h, const Sector& sec) {
  const int m = h.norb();
  CMatrix r = apply_one_body(detail::corrected_one_body(h.h1, h.v2), sec);
  r += h.e0 * sec.coeff;
  if (sec.key.n == 0) return r;
  const CMatrix d = one_body_transition(*sec.graph, detail::flat(sec.coeff));
  // vmat[(j,l), (i,k)] = V_ijkl
  const CMatrix vmat =
      detail::reshape_v(h.v2, [&](int j, int l, int i, int k) { return h.v2(i, j, k, l); });
  const CMatrix dt = d * vmat;
  const CMatrix two = one_body_contract(*sec.graph, dt, 1);
  r -= Eigen::Map<const CMatrix>(two.data(), r.rows(), r.cols());
  (void)m;
  return r;
}

/// Harrison-Zarrabian: resolution of the identity in the n-2 space, one F per channel pair.
inline CMatrix apply_hz_sector(const RestrictedHamiltonian& h, const Sector& sec, const SpaceTable& spaces) {
  const int m = h.norb();
  const auto mm = static_cast<std::size_t>(m);
  CMatrix r = apply_one_body(h.h1, sec);
  r += h.e0 * sec.coeff;
  // vt[(k,l), (i,j)] = V_ijkl
  const CMatrix vt = detail::reshape_v(h.v2, [&](int k, int l, int i, int j) { return h.v2(i, j, k, l); });
  const std::size_t db = sec.graph->dim_beta();
  for (Spin sigma : {Spin::alpha, Spin::beta})
    for (Spin rho : {Spin::alpha, Spin::beta}) {
      auto f = build_f_intermediate(sec, m, sigma, rho, spaces);
      if (!f) continue;
      const CMatrix ft = f->f * vt;
      const std::size_t dlb = spaces(f->l_beta).size();
      parallel_for(0, sec.graph->dim_alpha(), [&](std::size_t ia) {
        for (std::size_t ib = 0; ib < db; ++ib) {
          const DetRef i{static_cast<std::uint32_t>(ia), static_cast<std::uint32_t>(ib), sec.n_alpha(),
                         sec.n_beta()};
          cd acc = 0.0;
          // ⟨I| a†_iσ a†_jρ |L⟩ = ⟨L| a_jρ a_iσ |I⟩
          detail::for_each_annihilation(spaces, i, sigma, [&](int io, const DetRef& mid, int s1) {
            detail::for_each_annihilation(spaces, mid, rho, [&](int jo, const DetRef& l, int s2) {
              acc += static_cast<double>(s1 * s2) *
                     ft(static_cast<Eigen::Index>(l.ia * dlb + l.ib), static_cast<Eigen::Index>(io * mm + jo));
            });
          });
          r(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) += acc;
        }
      });
    }
  return r;
}

namespace detail {

/// Enumerates J with ⟨I| a†_i a†_j a_k a_l |J⟩ ≠ 0 inside one string space, calling
/// f(i, j, k, l, J, sign). Built from ⟨J| a†_l a†_k a_j a_i |I⟩.
template <class F>
void for_each_double_replacement(bits_t src, int m, F&& f) {
  for (int i = 0; i < m; ++i) {
    if (!occupied(src, i)) continue;
    const int s1 = parity_below(src, i);
    const bits_t b1 = src ^ (bits_t{1} << i);
    for (int j = 0; j < m; ++j) {
      if (!occupied(b1, j)) continue;
      const int s2 = s1 * parity_below(b1, j);
      const bits_t b2 = b1 ^ (bits_t{1} << j);
      for (int k = 0; k < m; ++k) {
        if (occupied(b2, k)) continue;
        const int s3 = s2 * parity_below(b2, k);
        const bits_t b3 = b2 | (bits_t{1} << k);
        for (int l = 0; l < m; ++l) {
          if (occupied(b3, l)) continue;
          f(i, j, k, l, b3 | (bits_t{1} << l), s3 * parity_below(b3, l));
        }
      }
    }
  }
}

}  // namespace detail

/// Olsen-style direct sigma build: loops only over nonzero replacement-list entries,
/// with no intermediate-state tensors. Same-spin parts use double replacements on one
/// string; the opposite-spin part is -Σ (V_ijkl + V_jilk) E^α_ik E^β_jl.
inline CMatrix apply_olsen_sector(const RestrictedHamiltonian& h, const Sector& sec) {
  const int m = h.norb();
  const auto& g = *sec.graph;
  const std::size_t da = g.dim_alpha();
  const std::size_t db = g.dim_beta();
  CMatrix r = apply_one_body(h.h1, sec);
  r += h.e0 * sec.coeff;
  const auto& c = sec.coeff;
  parallel_for(0, da, [&](std::size_t ia) {
    const auto row = static_cast<Eigen::Index>(ia);
    // alpha-alpha
    detail::for_each_double_replacement(g.alpha().string(ia), m, [&](int i, int j, int k, int l, bits_t jb, int s) {
      const cd v = h.v2(i, j, k, l);
      if (v != cd{0.0, 0.0})
        r.row(row) += (v * static_cast<double>(s)) * c.row(static_cast<Eigen::Index>(g.index_alpha(jb)));
    });
    for (std::size_t ib = 0; ib < db; ++ib) {
      cd acc = 0.0;
      // beta-beta
      detail::for_each_double_replacement(g.beta().string(ib), m, [&](int i, int j, int k, int l, bits_t jb, int s) {
        acc += h.v2(i, j, k, l) * static_cast<double>(s) * c(row, static_cast<Eigen::Index>(g.index_beta(jb)));
      });
      // alpha-beta
      for (const auto& ea : g.alpha().excitations(ia)) {
        const int i = ea.annihilate;
        const int k = ea.create;
        for (const auto& eb : g.beta().excitations(ib)) {
          const int j = eb.annihilate;
          const int l = eb.create;
          const cd w = h.v2(i, j, k, l) + h.v2(j, i, l, k);
          acc -= w * static_cast<double>(ea.parity * eb.parity) *
                 c(static_cast<Eigen::Index>(ea.target), static_cast<Eigen::Index>(eb.target));
        }
      }
      r(row, static_cast<Eigen::Index>(ib)) += acc;
    }
  });
  return r;
}

enum class DenseAlgorithm { knowles_handy, harrison_zarrabian, olsen };

inline const char* to_string(DenseAlgorithm a) {
  switch (a) {
    case DenseAlgorithm::knowles_handy: return "knowles_handy";
    case DenseAlgorithm::harrison_zarrabian: return "harrison_zarrabian";
    case DenseAlgorithm::olsen: return "olsen";
  }
  return "unknown";
}

inline constexpr double kDefaultFillingThreshold = 0.3;

struct DenseApplyOptions {
  double filling_threshold = kDefaultFillingThreshold;
  std::optional<DenseAlgorithm> force;
  /// Called once per sector with the algorithm used.
  std::function<void(const SectorKey&, DenseAlgorithm)> on_dispatch;
};

/// Filling n / 2m below the threshold selects Harrison-Zarrabian (when n >= 2).
inline DenseAlgorithm select_dense_algorithm(const SectorKey& key, int m,
                                             double threshold = kDefaultFillingThreshold) {
  const double filling = static_cast<double>(key.n) / (2.0 * m);
  return (filling < threshold && key.n >= 2) ? DenseAlgorithm::harrison_zarrabian
                                             : DenseAlgorithm::knowles_handy;
}

inline Wavefunction apply_dense(const RestrictedHamiltonian& h, const Wavefunction& w,
                                const DenseApplyOptions& opts = {}) {
  detail::check_restricted(h, w.norb());
  Wavefunction out = w.zeros_like();
  std::optional<SpaceTable> spaces;
  for (const auto& [key, sec] : w.sectors()) {
    const DenseAlgorithm algo = opts.force.value_or(select_dense_algorithm(key, w.norb(), opts.filling_threshold));
    if (opts.on_dispatch) opts.on_dispatch(key, algo);
    auto& dst = out.sector(key).coeff;
    switch (algo) {
      case DenseAlgorithm::knowles_handy: dst = apply_kh_sector(h, sec); break;
      case DenseAlgorithm::olsen: dst = apply_olsen_sector(h, sec); break;
      case DenseAlgorithm::harrison_zarrabian:
        if (key.n < 2)
          throw DomainError("Harrison-Zarrabian apply needs n >= 2, sector " + to_string(key));
        if (!spaces) spaces.emplace(w.norb());
        dst = apply_hz_sector(h, sec, *spaces);
        break;
    }
  }
  return out;
}

inline Wavefunction apply_dense_kh(const RestrictedHamiltonian& h, const Wavefunction& w) {
  DenseApplyOptions o;
  o.force = DenseAlgorithm::knowles_handy;
  return apply_dense(h, w, o);
}
inline Wavefunction apply_dense_hz(const RestrictedHamiltonian& h, const Wavefunction& w) {
  DenseApplyOptions o;
  o.force = DenseAlgorithm::harrison_zarrabian;
  return apply_dense(h, w, o);
}
inline Wavefunction apply_dense_olsen(const RestrictedHamiltonian& h, const Wavefunction& w) {
  DenseApplyOptions o;
  o.force = DenseAlgorithm::olsen;
  return apply_dense(h, w, o);
}

/// Spin-conserving spin-orbital Hamiltonian, KH style with per-channel D:
/// same-spin blocks give -E^σ_ik E^σ_jl plus Σ_k V^{σσ}_ikkl one-body corrections;
/// the alpha-beta and implied beta-alpha blocks give -2 Σ V^{ab}_ijkl E^α_ik E^β_jl.
inline Wavefunction apply_dense_sso(const SSOHamiltonian& h, const Wavefunction& w) {
  const int m = w.norb();
  if (h.norb() != m || h.h1b.rows() != m || h.v_aa.m != m || h.v_ab.m != m || h.v_bb.m != m)
    throw DomainError("SSO Hamiltonian dimension does not match m=" + std::to_string(m));
  Wavefunction out = w.zeros_like();
  const auto vmat = [&](const Tensor4& v) {
    return detail::reshape_v(v, [&](int j, int l, int i, int k) { return v(i, j, k, l); });
  };
  const CMatrix vaa = vmat(h.v_aa);
  const CMatrix vab = vmat(h.v_ab);
  const CMatrix vbb = vmat(h.v_bb);
  const CMatrix ha = detail::corrected_one_body(h.h1a, h.v_aa);
  const CMatrix hb = detail::corrected_one_body(h.h1b, h.v_bb);
  for (const auto& [key, sec] : w.sectors()) {
    auto& r = out.sector(key).coeff;
    r = apply_one_body(ha, sec, Channels::alpha) + apply_one_body(hb, sec, Channels::beta);
    r += h.e0 * sec.coeff;
    if (key.n == 0) continue;
    const CMatrix c = detail::flat(sec.coeff);
    const CMatrix da = one_body_transition(*sec.graph, c, Channels::alpha);
    const CMatrix dbeta = one_body_transition(*sec.graph, c, Channels::beta);
    const CMatrix ta = da * vaa + 2.0 * (dbeta * vab);
    const CMatrix tb = dbeta * vbb;
    const CMatrix ra = one_body_contract(*sec.graph, ta, 1, Channels::alpha);
    const CMatrix rb = one_body_contract(*sec.graph, tb, 1, Channels::beta);
    r -= Eigen::Map<const CMatrix>(ra.data(), r.rows(), r.cols());
    r -= Eigen::Map<const CMatrix>(rb.data(), r.rows(), r.cols());
  }
  return out;
}

/// Exact SSO form of a restricted Hamiltonian (ab block symmetrized over i<->j, k<->l).
inline SSOHamiltonian to_sso(const RestrictedHamiltonian& h) {
  SSOHamiltonian s;
  s.h1a = h.h1;
  s.h1b = h.h1;
  s.v_aa = h.v2;
  s.v_bb = h.v2;
  s.v_ab = Tensor4(h.norb());
  const int m = h.norb();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) s.v_ab(i, j, k, l) = 0.5 * (h.v2(i, j, k, l) + h.v2(j, i, l, k));
  s.e0 = h.e0;
  return s;
}

// ---------------------------------------------------------------------------
// Other structured Hamiltonians

/// Σ_rs W_rs n_r n_s per determinant of a sector, row-major over (Iα, Iβ).
inline std::vector<double> diagonal_coulomb_energies(const CMatrix& w, const FciGraph& g) {
  const int m = g.norb();
  const Eigen::MatrixXd wr = w.real();
  const std::size_t da = g.dim_alpha();
  const std::size_t db = g.dim_beta();
  auto same_spin = [&](bits_t b) {
    double e = 0.0;
    for (bits_t x = b; x; x &= x - 1)
      for (bits_t y = b; y; y &= y - 1) e += wr(std::countr_zero(x), std::countr_zero(y));
    return e;
  };
  std::vector<double> eb(db);
  for (std::size_t ib = 0; ib < db; ++ib) eb[ib] = same_spin(g.beta().string(ib));
  std::vector<double> out(da * db);
  parallel_for(0, da, [&](std::size_t ia) {
    const bits_t a = g.alpha().string(ia);
    const double ea = same_spin(a);
    // cross[q] = Σ_{p in alpha} (W_pq + W_qp)
    std::array<double, kMaxOrbitals> cross{};
    for (bits_t x = a; x; x &= x - 1) {
      const int p = std::countr_zero(x);
      for (int q = 0; q < m; ++q) cross[static_cast<std::size_t>(q)] += wr(p, q) + wr(q, p);
    }
    double* row = out.data() + ia * db;
    for (std::size_t ib = 0; ib < db; ++ib) {
      double x = ea + eb[ib];
      for (bits_t b = g.beta().string(ib); b; b &= b - 1) x += cross[static_cast<std::size_t>(std::countr_zero(b))];
      row[ib] = x;
    }
  });
  return out;
}

inline Wavefunction apply_diagonal_coulomb(const DiagonalCoulomb& dc, const Wavefunction& w) {
  require_hermitian(dc.w, "diagonal Coulomb matrix W");
  if (dc.w.rows() != w.norb()) throw DomainError("W dimension does not match m");
  Wavefunction out = w;
  for (auto& [key, sec] : out.sectors()) {
    const auto e = diagonal_coulomb_energies(dc.w, *sec.graph);
    for (Eigen::Index i = 0; i < sec.coeff.size(); ++i) sec.coeff.data()[i] *= e[static_cast<std::size_t>(i)];
  }
  return out;
}

inline Wavefunction apply_quadratic(const QuadraticHamiltonian& q, const Wavefunction& w) {
  if (q.a.rows() != w.norb() || q.a.cols() != w.norb()) throw DomainError("A dimension does not match m");
  Wavefunction out = w.zeros_like();
  for (const auto& [key, sec] : w.sectors()) out.sector(key).coeff = apply_one_body(q.a, sec);
  return out;
}

/// Σ_k (ĝ_k + ĝ_k†)|w⟩, one term at a time.
inline Wavefunction apply_sparse(const SparseHamiltonian& h, const Wavefunction& w) {
  Wavefunction out = w.zeros_like();
  for (const auto& t : h.generator.terms) {
    out.axpy(1.0, apply_term(t, w));
    out.axpy(1.0, apply_term(t.adjoint(), w));
  }
  return out;
}

/// Ĥ|w⟩ for any Hamiltonian variant.
inline Wavefunction apply(const Hamiltonian& h, const Wavefunction& w, const DenseApplyOptions& opts = {}) {
  struct Visitor {
    const Wavefunction& w;
    const DenseApplyOptions& opts;
    Wavefunction operator()(const SparseHamiltonian& s) const { return apply_sparse(s, w); }
    Wavefunction operator()(const DiagonalCoulomb& d) const { return apply_diagonal_coulomb(d, w); }
    Wavefunction operator()(const QuadraticHamiltonian& q) const { return apply_quadratic(q, w); }
    Wavefunction operator()(const RestrictedHamiltonian& r) const { return apply_dense(r, w, opts); }
    Wavefunction operator()(const SSOHamiltonian& s) const { return apply_dense_sso(s, w); }
  };
  return std::visit(Visitor{w, opts}, h);
}

}  // namespace fqe
