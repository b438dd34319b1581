#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fqe/apply.hpp"
#include "fqe/error.hpp"
#include "fqe/operators.hpp"
#include "fqe/parallel.hpp"
#include "fqe/wavefunction.hpp"

namespace fqe {

struct SeriesControl {
  double threshold = 1.0e-14;
  std::optional<int> max_terms = 64;
};

inline void validate(const SeriesControl& c) {
  if (!(c.threshold > 0.0) && !c.max_terms)
    throw DomainError("SeriesControl needs threshold > 0 or max_terms");
  if (c.max_terms && *c.max_terms < 1) throw DomainError("SeriesControl max_terms must be >= 1");
}

struct SpectralWindow {
  double e_min = -1.0;
  double e_max = 1.0;
  double w_prime = 0.9875;

  double delta() const { return (e_max - e_min) / (2.0 * w_prime); }
  double shift() const { return -(e_max + e_min) / 2.0; }
};

inline void validate(const SpectralWindow& w) {
  if (!(w.e_max > w.e_min)) throw DomainError("SpectralWindow needs e_max > e_min");
  if (!(w.w_prime > 0.0 && w.w_prime < 1.0)) throw DomainError("SpectralWindow needs 0 < w' < 1");
}

/// What a series propagation did.
struct SeriesReport {
  int terms_used = 0;
  double last_contribution = 0.0;
};

// ---------------------------------------------------------------------------
// Exact evolution under ĝ + ĝ†

enum class ExcitationCase { diagonal, plain, hybrid };

inline ExcitationCase classify_excitation(const ExcitationTerm& term) {
  if (term.is_diagonal()) return ExcitationCase::diagonal;
  return term.has_repeated_indices() ? ExcitationCase::hybrid : ExcitationCase::plain;
}

/// e^{-iε(ĝ+ĝ†)}|w⟩. A diagonal ĝ multiplies each determinant by e^{-iε·2Re⟨I|ĝ|I⟩}.
/// Otherwise ĝ² = 0 and ĝ maps determinants one-to-one, so the generator splits into
/// 2×2 blocks {J, I = ĝJ} with (ĝ+ĝ†)² = |g|² on the block and
///   e^{-iε(ĝ+ĝ†)} = cos(ε|g|) - i sin(ε|g|)/|g| (ĝ+ĝ†).
/// Repeated indices only change which determinants belong to a block and the parity,
/// both of which come out of the per-determinant application.
inline Wavefunction evolve_excitation(double epsilon, const ExcitationTerm& term, const Wavefunction& w) {
  detail::check_term_orbitals(term, w.norb());
  if (!term.conserves_sectors())
    throw DomainError("evolve_excitation: term " + to_string(term) + " changes particle number or S_z");
  Wavefunction out = w;
  if (epsilon == 0.0 || term.is_nilpotent() || term.coefficient == cd{0.0, 0.0}) return out;
  const cd g = term.coefficient;
  const double ag = std::abs(g);
  const double co = std::cos(epsilon * ag);
  const cd si = cd{0.0, -std::sin(epsilon * ag) / ag};
  const bool diagonal = term.is_diagonal();

  for (auto& [key, sec] : out.sectors()) {
    const auto& graph = *sec.graph;
    const std::size_t db = graph.dim_beta();
    const CMatrix src = sec.coeff;
    cd* dst = sec.coeff.data();
    parallel_for(0, graph.dim_alpha(), [&](std::size_t ja) {
      for (std::size_t jb = 0; jb < db; ++jb) {
        bits_t a = graph.alpha().string(ja);
        bits_t b = graph.beta().string(jb);
        int s = 1;
        if (!apply_ops(term.ops, a, b, s)) continue;
        const std::size_t j = ja * db + jb;
        if (diagonal) {
          dst[j] = src.data()[j] * std::exp(cd{0.0, -epsilon * 2.0 * (g * static_cast<double>(s)).real()});
          continue;
        }
        const std::size_t i = graph.index_alpha(a) * db + graph.index_beta(b);
        const cd cj = src.data()[j];
        const cd ci = src.data()[i];
        dst[i] = co * ci + si * g * static_cast<double>(s) * cj;
        dst[j] = co * cj + si * std::conj(g) * static_cast<double>(s) * ci;
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal Coulomb

inline Wavefunction evolve_diagonal_coulomb(double t, const DiagonalCoulomb& dc, const Wavefunction& w) {
  require_hermitian(dc.w, "diagonal Coulomb matrix W");
  if (dc.w.rows() != w.norb()) throw DomainError("W dimension does not match m");
  Wavefunction out = w;
  if (t == 0.0) return out;
  for (auto& [key, sec] : out.sectors()) {
    const auto e = diagonal_coulomb_energies(dc.w, *sec.graph);
    cd* c = sec.coeff.data();
    for (std::size_t i = 0; i < e.size(); ++i) c[i] *= std::exp(cd{0.0, -t * e[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Series propagation. `apply_h` maps a Wavefunction to Ĥ times it.

template <class ApplyH>
  requires std::invocable<ApplyH&, const Wavefunction&>
Wavefunction evolve_taylor(double t, ApplyH&& apply_h, const SeriesControl& ctrl, const Wavefunction& w,
                           SeriesReport* report = nullptr) {
  validate(ctrl);
  Wavefunction out = w;
  if (t == 0.0) {
    if (report) *report = {0, 0.0};
    return out;
  }
  Wavefunction term = w;
  const int cap = ctrl.max_terms.value_or(std::numeric_limits<int>::max());
  double last = term.norm();
  for (int n = 1;; ++n) {
    if (n > cap)
      throw ConvergenceError("Taylor series did not converge within " + std::to_string(cap) +
                                 " terms (last term norm " + std::to_string(last) + ")",
                             cap, last);
    term = apply_h(term);
    term.scale(cd{0.0, -t / n});
    out.axpy(1.0, term);
    last = term.norm();
    if (last < ctrl.threshold) {
      if (report) *report = {n, last};
      return out;
    }
  }
}

/// Chebyshev expansion of e^{-iĤt} over the window:
///   e^{-iĤt} = e^{iε_shift t} [J_0(x) T_0(Ĥ') + 2 Σ_{n≥1} (-i)^n J_n(x) T_n(Ĥ')],  x = Δε t,
/// with J_n the ordinary Bessel function of the first kind and T_n the Chebyshev polynomials
/// of Ĥ' = (Ĥ + ε_shift)/Δε. The loop stops once n > |x| and the term falls below threshold.
template <class ApplyH>
  requires std::invocable<ApplyH&, const Wavefunction&>
Wavefunction evolve_chebyshev(double t, ApplyH&& apply_h, const SpectralWindow& window,
                              const SeriesControl& ctrl, const Wavefunction& w,
                              SeriesReport* report = nullptr) {
  validate(ctrl);
  validate(window);
  if (t == 0.0) {
    if (report) *report = {0, 0.0};
    return w;
  }
  const double de = window.delta();
  const double shift = window.shift();
  const double x = de * t;
  const double ax = std::abs(x);
  auto bessel = [&](int n) {
    const double j = std::cyl_bessel_j(static_cast<double>(n), ax);
    return (x < 0.0 && (n & 1)) ? -j : j;
  };
  auto apply_scaled = [&](const Wavefunction& v) {
    Wavefunction r = apply_h(v);
    r.axpy(cd{shift, 0.0}, v);
    r.scale(cd{1.0 / de, 0.0});
    return r;
  };

  Wavefunction out = w;
  out.scale(cd{bessel(0), 0.0});
  Wavefunction prev = w;
  Wavefunction cur = apply_scaled(w);
  const int cap = ctrl.max_terms.value_or(std::numeric_limits<int>::max());
  cd phase{0.0, -1.0};  // (-i)^n
  double last = 0.0;
  for (int n = 1;; ++n) {
    const double jn = bessel(n);
    out.axpy(2.0 * jn * phase, cur);
    last = std::abs(2.0 * jn) * cur.norm();
    if (n > ax && last < ctrl.threshold) {
      if (report) *report = {n + 1, last};
      break;
    }
    if (n + 1 >= cap)
      throw ConvergenceError("Chebyshev series did not converge within " + std::to_string(cap) +
                                 " terms (|x| = " + std::to_string(ax) + ", last term " +
                                 std::to_string(last) + ")",
                             cap, last);
    Wavefunction next = apply_scaled(cur);
    next.scale(2.0);
    next.axpy(-1.0, prev);
    prev = std::move(cur);
    cur = std::move(next);
    phase *= cd{0.0, -1.0};
  }
  out.scale(std::exp(cd{0.0, shift * t}));
  return out;
}

namespace detail {
inline auto hamiltonian_applier(const Hamiltonian& h, const DenseApplyOptions& opts = {}) {
  return [&h, opts](const Wavefunction& v) { return apply(h, v, opts); };
}
}  // namespace detail

inline Wavefunction evolve_taylor(double t, const Hamiltonian& h, const SeriesControl& ctrl,
                                  const Wavefunction& w, SeriesReport* report = nullptr) {
  return evolve_taylor(t, detail::hamiltonian_applier(h), ctrl, w, report);
}

inline Wavefunction evolve_chebyshev(double t, const Hamiltonian& h, const SpectralWindow& window,
                                     const SeriesControl& ctrl, const Wavefunction& w,
                                     SeriesReport* report = nullptr) {
  return evolve_chebyshev(t, detail::hamiltonian_applier(h), window, ctrl, w, report);
}

enum class SeriesMethod { taylor, chebyshev };

/// Series propagation with the apply step looping over the terms of ĝ_k + ĝ_k†.
inline Wavefunction evolve_sparse(double t, const SparseHamiltonian& sh, const SeriesControl& ctrl,
                                  const Wavefunction& w, SeriesMethod method = SeriesMethod::taylor,
                                  std::optional<SpectralWindow> window = std::nullopt,
                                  SeriesReport* report = nullptr);

/// Operator-norm bound B with spectrum ⊂ [center - B, center + B], from the operator data.
/// ‖E_ij‖ ≤ 2 and ‖Σ_σρ a†_iσ a†_jρ a_kσ a_lρ‖ ≤ 4, so the triangle inequality over terms gives
/// an over-bracketing window without touching the state space.
inline SpectralWindow default_window(const Hamiltonian& h) {
  struct Visitor {
    std::pair<double, double> operator()(const SparseHamiltonian& s) const {
      double b = 0.0;
      for (const auto& t : s.generator.terms) b += 2.0 * std::abs(t.coefficient);
      return {0.0, b};
    }
    std::pair<double, double> operator()(const DiagonalCoulomb& d) const {
      return {0.0, 4.0 * d.w.cwiseAbs().sum()};
    }
    std::pair<double, double> operator()(const QuadraticHamiltonian& q) const {
      return {0.0, 2.0 * q.a.cwiseAbs().sum()};
    }
    std::pair<double, double> operator()(const RestrictedHamiltonian& r) const {
      double b = 2.0 * r.h1.cwiseAbs().sum();
      for (const auto& v : r.v2.data) b += 4.0 * std::abs(v);
      return {r.e0, b};
    }
    std::pair<double, double> operator()(const SSOHamiltonian& s) const {
      double b = s.h1a.cwiseAbs().sum() + s.h1b.cwiseAbs().sum();
      for (const auto* t : {&s.v_aa, &s.v_bb})
        for (const auto& v : t->data) b += std::abs(v);
      for (const auto& v : s.v_ab.data) b += 2.0 * std::abs(v);
      return {s.e0, b};
    }
  };
  auto [center, b] = std::visit(Visitor{}, h);
  if (b == 0.0) b = 1.0;
  return {center - b, center + b, 0.9875};
}

inline Wavefunction evolve_sparse(double t, const SparseHamiltonian& sh, const SeriesControl& ctrl,
                                  const Wavefunction& w, SeriesMethod method,
                                  std::optional<SpectralWindow> window, SeriesReport* report) {
  auto step = [&sh](const Wavefunction& v) { return apply_sparse(sh, v); };
  if (method == SeriesMethod::taylor) return evolve_taylor(t, step, ctrl, w, report);
  const SpectralWindow win = window.value_or(default_window(Hamiltonian{sh}));
  return evolve_chebyshev(t, step, win, ctrl, w, report);
}

// ---------------------------------------------------------------------------
// Quadratic Hamiltonians: orbital rotation by a sequence of one-column operators

/// X = L·U·P with L unit lower triangular, U upper triangular, P a permutation, and
/// F = U⁻¹ - L, whose columns define the one-column operators of the transformation.
struct LuFactors {
  CMatrix l;
  CMatrix u;
  Eigen::MatrixXd p;
  CMatrix f;
};

namespace detail {

/// Row-pivoted LU, A = P̄·L̄·Ū, Doolittle with partial pivoting on |a|.
inline void lu_row_pivot(const CMatrix& a, Eigen::MatrixXd& pbar, CMatrix& lbar, CMatrix& ubar) {
  const Eigen::Index n = a.rows();
  CMatrix work = a;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  lbar = CMatrix::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index r = k + 1; r < n; ++r)
      if (std::abs(work(r, k)) > std::abs(work(piv, k))) piv = r;
    if (std::abs(work(piv, k)) < 1.0e-14) throw NumericError("LU: singular pivot in column " + std::to_string(k));
    if (piv != k) {
      work.row(k).swap(work.row(piv));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(piv)]);
      for (Eigen::Index c = 0; c < k; ++c) std::swap(lbar(k, c), lbar(piv, c));
    }
    for (Eigen::Index r = k + 1; r < n; ++r) {
      const cd f = work(r, k) / work(k, k);
      lbar(r, k) = f;
      work.row(r).tail(n - k) -= f * work.row(k).tail(n - k);
      work(r, k) = 0.0;
    }
  }
  ubar = work.triangularView<Eigen::Upper>();
  // rows of the factored matrix are a.row(perm[i]), i.e. (P̄ᵀ a)_i = a_{perm[i]}
  pbar = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) pbar(perm[static_cast<std::size_t>(i)], i) = 1.0;
}

inline CMatrix inverse_upper(const CMatrix& u) {
  const Eigen::Index n = u.rows();
  return u.triangularView<Eigen::Upper>().solve(CMatrix::Identity(n, n));
}

}  // namespace detail

/// Column-pivoted LU through the row-pivoted LU of the transpose: Xᵀ = P̄L̄Ū gives
/// X = Ūᵀ L̄ᵀ P̄ᵀ, then the diagonal of Ūᵀ is moved into the upper factor.
inline LuFactors lu_column_pivot(const CMatrix& x) {
  if (x.rows() != x.cols()) throw DomainError("lu_column_pivot needs a square matrix");
  Eigen::MatrixXd pbar;
  CMatrix lbar, ubar;
  detail::lu_row_pivot(x.transpose(), pbar, lbar, ubar);
  const CMatrix lower = ubar.transpose();
  const CVector d = lower.diagonal();
  LuFactors r;
  r.l = lower * d.cwiseInverse().asDiagonal();
  r.u = d.asDiagonal() * lbar.transpose();
  r.p = pbar.transpose();
  r.f = detail::inverse_upper(r.u) - r.l;
  return r;
}

/// (1 + F̂_kσ)|w⟩ with F̂_kσ = Σ_i F_ik a†_iσ a_kσ, in one pass over the strings holding k:
/// every string without k receives contributions from the strings with k, then the
/// strings with k are scaled by 1 + F_kk.
inline void apply_column_operator_inplace(const CVector& f_col, int k, Spin spin, Wavefunction& w) {
  const int m = w.norb();
  if (k < 0 || k >= m) throw DomainError("apply_column_operator: orbital " + std::to_string(k) + " out of range");
  if (f_col.size() != m) throw DomainError("apply_column_operator: column has wrong length");
  for (auto& [key, sec] : w.sectors()) {
    const auto& g = *sec.graph;
    const auto& space = g.channel(spin);
    for (int i = 0; i < m; ++i) {
      if (i == k || f_col(i) == cd{0.0, 0.0}) continue;
      for (const auto& l : g.excitation_map(i, k, spin)) {
        const cd f = f_col(i) * static_cast<double>(l.parity);
        if (spin == Spin::alpha)
          sec.coeff.row(l.target) += f * sec.coeff.row(l.source);
        else
          sec.coeff.col(l.target) += f * sec.coeff.col(l.source);
      }
    }
    const cd diag = 1.0 + f_col(k);
    for (std::size_t s = 0; s < space.size(); ++s) {
      if (!occupied(space.string(s), k)) continue;
      if (spin == Spin::alpha)
        sec.coeff.row(static_cast<Eigen::Index>(s)) *= diag;
      else
        sec.coeff.col(static_cast<Eigen::Index>(s)) *= diag;
    }
  }
}

inline Wavefunction apply_column_operator(const CVector& f_col, int k, Spin spin, const Wavefunction& w) {
  Wavefunction out = w;
  apply_column_operator_inplace(f_col, k, spin, out);
  return out;
}

/// Sweeps (1 + F̂_kσ) for k = 0..m-1, alpha then beta. For Y = L·U with F = U⁻¹ - L this
/// maps every determinant to the one built from the orbitals transformed by Y⁻¹.
inline void column_sweep(const CMatrix& f, Wavefunction& w) {
  for (Spin s : {Spin::alpha, Spin::beta})
    for (int k = 0; k < f.cols(); ++k) apply_column_operator_inplace(f.col(k), k, s, w);
}

/// Factors for the inverse transformation: (LU)† = L'U' with L' = U†D⁻¹, U' = D L†,
/// D = diag(U†); no pivoting is needed since U† is already lower triangular.
inline CMatrix adjoint_sweep_matrix(const LuFactors& lu) {
  const CMatrix ud = lu.u.adjoint();
  const CVector d = ud.diagonal();
  const CMatrix l2 = ud * d.cwiseInverse().asDiagonal();
  const CMatrix u2 = d.asDiagonal() * lu.l.adjoint();
  return detail::inverse_upper(u2) - l2;
}

/// e^{-iÂt} = Γ(LU) e^{-iâ't} Γ((LU)⁻¹) with A = X diag(a) X†, X = LUP and â' the diagonal
/// operator with orbital energies (P diag(a) Pᵀ)_ii. Degenerate eigenvalues are harmless:
/// any unitary X works.
inline Wavefunction evolve_quadratic(double t, const QuadraticHamiltonian& q, const Wavefunction& w,
                                     LuFactors* factors_out = nullptr) {
  const int m = w.norb();
  if (q.a.rows() != m || q.a.cols() != m) throw DomainError("A dimension does not match m");
  require_hermitian(q.a, "quadratic Hamiltonian A");
  Wavefunction out = w;
  if (t == 0.0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(q.a));
  const CMatrix x = es.eigenvectors();
  const Eigen::VectorXd a = es.eigenvalues();
  LuFactors lu = lu_column_pivot(x);
  column_sweep(lu.f, out);
  const Eigen::VectorXd ap = lu.p * a;  // (P diag(a) Pᵀ)_ii = (P a)_i
  for (auto& [key, sec] : out.sectors()) {
    const auto& g = *sec.graph;
    auto energy = [&](bits_t b) {
      double e = 0.0;
      for (; b; b &= b - 1) e += ap(std::countr_zero(b));
      return e;
    };
    for (std::size_t ia = 0; ia < g.dim_alpha(); ++ia) {
      const double ea = energy(g.alpha().string(ia));
      for (std::size_t ib = 0; ib < g.dim_beta(); ++ib)
        sec.coeff(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) *=
            std::exp(cd{0.0, -t * (ea + energy(g.beta().string(ib)))});
    }
  }
  column_sweep(adjoint_sweep_matrix(lu), out);
  if (factors_out) *factors_out = std::move(lu);
  return out;
}

// ---------------------------------------------------------------------------
// Automatic dispatch

struct EvolveOptions {
  std::optional<SeriesMethod> method;  // forced series method for series paths
  SeriesControl control;
  std::optional<SpectralWindow> window;
  DenseApplyOptions dense;
};

struct EvolveResult {
  Wavefunction wfn;
  std::string method_used;
  int terms_used = 0;
};

/// Exact paths for diagonal Coulomb, quadratic and single-term sparse Hamiltonians;
/// series propagation otherwise (Taylor unless Chebyshev is requested).
inline EvolveResult time_evolve(double t, const Hamiltonian& h, const Wavefunction& w,
                                const EvolveOptions& opts = {}) {
  if (required_orbitals(h) > w.norb())
    throw DomainError("Hamiltonian needs " + std::to_string(required_orbitals(h)) +
                      " orbitals but the wavefunction has m=" + std::to_string(w.norb()));
  if (!opts.method) {
    if (const auto* d = std::get_if<DiagonalCoulomb>(&h))
      return {evolve_diagonal_coulomb(t, *d, w), "diagonal_coulomb", 0};
    if (const auto* q = std::get_if<QuadraticHamiltonian>(&h))
      return {evolve_quadratic(t, *q, w), "quadratic", 0};
    if (const auto* s = std::get_if<SparseHamiltonian>(&h); s && s->generator.terms.size() == 1)
      return {evolve_excitation(t, s->generator.terms[0], w), "excitation", 0};
  }
  SeriesReport rep;
  const auto applier = [&h, &opts](const Wavefunction& v) { return apply(h, v, opts.dense); };
  if (opts.method.value_or(SeriesMethod::taylor) == SeriesMethod::taylor)
    return {evolve_taylor(t, applier, opts.control, w, &rep), "taylor", rep.terms_used};
  const SpectralWindow win = opts.window.value_or(default_window(h));
  return {evolve_chebyshev(t, applier, win, opts.control, w, &rep), "chebyshev", rep.terms_used};
}

}  // namespace fqe
