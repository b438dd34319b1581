#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fqe/error.hpp"
#include "fqe/fci_graph.hpp"
#include "fqe/io.hpp"
#include "fqe/wavefunction.hpp"

namespace fqe {

/// a†_{p,σ} or a_{p,σ}. Externally addressed as spin-orbital 2p (alpha) / 2p+1 (beta).
struct LadderOp {
  int orbital = 0;
  Spin spin = Spin::alpha;
  LadderKind kind = LadderKind::create;

  int external_index() const { return 2 * orbital + static_cast<int>(spin); }
  static LadderOp from_external(int index, LadderKind kind) {
    return {index / 2, index % 2 == 0 ? Spin::alpha : Spin::beta, kind};
  }
  bool is_create() const { return kind == LadderKind::create; }

  bool operator==(const LadderOp&) const = default;
};

inline LadderOp cre(int p, Spin s) { return {p, s, LadderKind::create}; }
inline LadderOp des(int p, Spin s) { return {p, s, LadderKind::annihilate}; }

/// coefficient · ops[0] ops[1] ... ops[k-1]; the rightmost operator acts first.
struct ExcitationTerm {
  cd coefficient{1.0, 0.0};
  std::vector<LadderOp> ops;

  /// Change in (n_alpha, n_beta) produced by the operator string.
  std::pair<int, int> particle_change() const {
    int da = 0;
    int db = 0;
    for (const auto& op : ops) {
      const int d = op.is_create() ? 1 : -1;
      (op.spin == Spin::alpha ? da : db) += d;
    }
    return {da, db};
  }

  bool conserves_sectors() const { return particle_change() == std::pair<int, int>{0, 0}; }

  /// Zero on every state: some mode is created twice or annihilated twice in a row.
  bool is_nilpotent() const {
    std::map<int, int> state;  // 0 unknown, 1 occupied, 2 empty
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      int& st = state[it->external_index()];
      if (it->is_create()) {
        if (st == 1) return true;
        st = 1;
      } else {
        if (st == 2) return true;
        st = 2;
      }
    }
    return false;
  }

  /// Maps every determinant to a multiple of itself (polynomial in number operators).
  bool is_diagonal() const {
    if (is_nilpotent()) return true;
    std::map<int, int> net;
    for (const auto& op : ops) net[op.external_index()] += op.is_create() ? 1 : -1;
    return std::all_of(net.begin(), net.end(), [](const auto& kv) { return kv.second == 0; });
  }

  /// Any spin-orbital touched more than once.
  bool has_repeated_indices() const {
    std::vector<int> idx;
    for (const auto& op : ops) idx.push_back(op.external_index());
    std::sort(idx.begin(), idx.end());
    return std::adjacent_find(idx.begin(), idx.end()) != idx.end();
  }

  ExcitationTerm adjoint() const {
    ExcitationTerm out;
    out.coefficient = std::conj(coefficient);
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      LadderOp op = *it;
      op.kind = op.is_create() ? LadderKind::annihilate : LadderKind::create;
      out.ops.push_back(op);
    }
    return out;
  }

  int max_orbital() const {
    int mx = -1;
    for (const auto& op : ops) mx = std::max(mx, op.orbital);
    return mx;
  }

  bool operator==(const ExcitationTerm&) const = default;
};

/// Plain sum of excitation terms, as written.
struct FermionOperator {
  std::vector<ExcitationTerm> terms;

  bool operator==(const FermionOperator&) const = default;
};

/// H = Σ_k (ĝ_k + ĝ_k†) over the generator's terms.
struct SparseHamiltonian {
  FermionOperator generator;
};

/// H = Σ_rs W_rs n̂_r n̂_s with spin-summed number operators.
struct DiagonalCoulomb {
  CMatrix w;
};

/// Â = Σ_ij A_ij Σ_σ a†_iσ a_jσ.
struct QuadraticHamiltonian {
  CMatrix a;
};

/// Rank-4 tensor over spatial orbitals, row-major (i, j, k, l).
struct Tensor4 {
  int m = 0;
  std::vector<cd> data;

  Tensor4() = default;
  explicit Tensor4(int norb) : m(norb), data(static_cast<std::size_t>(norb) * norb * norb * norb) {}

  std::size_t offset(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * m + j) * m + k) * m + l;
  }
  cd& operator()(int i, int j, int k, int l) { return data[offset(i, j, k, l)]; }
  const cd& operator()(int i, int j, int k, int l) const { return data[offset(i, j, k, l)]; }
};

/// Spin-free Hamiltonian e0 + Σ h_ij E_ij + Σ_ijkl Σ_σρ V_ijkl a†_iσ a†_jρ a_kσ a_lρ.
struct RestrictedHamiltonian {
  CMatrix h1;
  Tensor4 v2;
  double e0 = 0.0;

  int norb() const { return static_cast<int>(h1.rows()); }
};

/// Sz-conserving spin-orbital Hamiltonian:
/// e0 + Σ_σ Σ h^σ_ij a†_iσ a_jσ + Σ_σρ Σ V^{σρ}_ijkl a†_iσ a†_jρ a_kσ a_lρ
/// with blocks aa, ab, bb and the beta-alpha block implied by V^{βα}_ijkl = V^{αβ}_jilk.
struct SSOHamiltonian {
  CMatrix h1a;
  CMatrix h1b;
  Tensor4 v_aa;
  Tensor4 v_ab;
  Tensor4 v_bb;
  double e0 = 0.0;

  int norb() const { return static_cast<int>(h1a.rows()); }
};

using Hamiltonian = std::variant<SparseHamiltonian, DiagonalCoulomb, QuadraticHamiltonian,
                                 RestrictedHamiltonian, SSOHamiltonian>;

enum class HamiltonianKind {
  diagonal_number_poly,
  diagonal_coulomb,
  quadratic,
  sparse,
  restricted_dense,
  sso_dense,
};

inline const char* to_string(HamiltonianKind k) {
  switch (k) {
    case HamiltonianKind::diagonal_number_poly: return "diagonal_number_poly";
    case HamiltonianKind::diagonal_coulomb: return "diagonal_coulomb";
    case HamiltonianKind::quadratic: return "quadratic";
    case HamiltonianKind::sparse: return "sparse";
    case HamiltonianKind::restricted_dense: return "restricted_dense";
    case HamiltonianKind::sso_dense: return "sso_dense";
  }
  return "unknown";
}

inline HamiltonianKind classify(const FermionOperator& op) {
  const bool diagonal = std::all_of(op.terms.begin(), op.terms.end(),
                                    [](const ExcitationTerm& t) { return t.is_diagonal(); });
  return diagonal ? HamiltonianKind::diagonal_number_poly : HamiltonianKind::sparse;
}

inline HamiltonianKind classify(const Hamiltonian& h) {
  struct Visitor {
    HamiltonianKind operator()(const SparseHamiltonian& s) const { return classify(s.generator); }
    HamiltonianKind operator()(const DiagonalCoulomb&) const {
      return HamiltonianKind::diagonal_coulomb;
    }
    HamiltonianKind operator()(const QuadraticHamiltonian&) const {
      return HamiltonianKind::quadratic;
    }
    HamiltonianKind operator()(const RestrictedHamiltonian&) const {
      return HamiltonianKind::restricted_dense;
    }
    HamiltonianKind operator()(const SSOHamiltonian&) const { return HamiltonianKind::sso_dense; }
  };
  return std::visit(Visitor{}, h);
}

/// Largest orbital index + 1 the Hamiltonian refers to (0 for an empty sparse operator).
inline int required_orbitals(const Hamiltonian& h) {
  struct Visitor {
    int operator()(const SparseHamiltonian& s) const {
      int mx = -1;
      for (const auto& t : s.generator.terms) mx = std::max(mx, t.max_orbital());
      return mx + 1;
    }
    int operator()(const DiagonalCoulomb& d) const { return static_cast<int>(d.w.rows()); }
    int operator()(const QuadraticHamiltonian& q) const { return static_cast<int>(q.a.rows()); }
    int operator()(const RestrictedHamiltonian& r) const { return r.norb(); }
    int operator()(const SSOHamiltonian& s) const { return s.norb(); }
  };
  return std::visit(Visitor{}, h);
}

inline double hermiticity_residual(const CMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const CMatrix& a, const char* what, double tol = 1.0e-12) {
  if (a.rows() != a.cols()) throw DomainError(std::string(what) + " must be square");
  if (a.size() > 0 && hermiticity_residual(a) > tol)
    throw DomainError(std::string(what) + " is not Hermitian (residual " +
                      std::to_string(hermiticity_residual(a)) + ")");
}

// ---------------------------------------------------------------------------
// Operator-string grammar
//
//   operator := term { ("+" | "-") term }
//   term     := [coefficient] { ladder }
//   ladder   := <int> | <int>^            (2p -> alpha, 2p+1 -> beta; ^ = creation)
//   coefficient := <real> | <real>j | "(" <real> ("+"|"-") <real> "j)"
//
// Tokens are whitespace separated; "+" and "-" between terms must stand alone.

namespace detail {

inline bool parse_ladder_token(std::string_view tok, LadderOp& out) {
  const bool dagger = !tok.empty() && tok.back() == '^';
  std::string_view digits = dagger ? tok.substr(0, tok.size() - 1) : tok;
  if (digits.empty()) return false;
  if (digits.front() == '-') {
    if (dagger) throw ParseError("negative orbital index in token '" + std::string(tok) + "'");
    return false;
  }
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return false;
  int idx = 0;
  auto res = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
  if (res.ec != std::errc()) throw ParseError("index out of range in token '" + std::string(tok) + "'");
  out = LadderOp::from_external(idx, dagger ? LadderKind::create : LadderKind::annihilate);
  return true;
}

inline cd parse_coefficient_token(std::string_view tok) {
  if (tok.front() == '(') return parse_complex(tok);
  if (tok.back() == 'j') {
    auto body = tok.substr(0, tok.size() - 1);
    if (body.empty() || body == "+") return {0.0, 1.0};
    if (body == "-") return {0.0, -1.0};
    return {0.0, parse_double(body, "coefficient '" + std::string(tok) + "'")};
  }
  return {parse_double(tok, "coefficient '" + std::string(tok) + "'"), 0.0};
}

}  // namespace detail

inline FermionOperator parse_operator_string(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::vector<std::string> tokens;
  for (std::string tok; is >> tok;) tokens.push_back(tok);
  if (tokens.empty()) throw ParseError("empty operator string");

  FermionOperator op;
  ExcitationTerm current;
  bool have_coeff = false;
  bool term_open = false;
  double sign = 1.0;
  auto close_term = [&] {
    if (!term_open) throw ParseError("empty term in operator string '" + std::string(text) + "'");
    current.coefficient *= sign;
    op.terms.push_back(current);
    current = ExcitationTerm{};
    have_coeff = false;
    term_open = false;
    sign = 1.0;
  };
  bool pending_sign = false;
  for (const std::string& tok : tokens) {
    if (tok == "+" || tok == "-") {
      if (term_open) close_term();
      else if (pending_sign) throw ParseError("consecutive signs before '" + tok + "'");
      pending_sign = true;
      if (tok == "-") sign = -1.0;
      continue;
    }
    pending_sign = false;
    LadderOp ladder;
    if (detail::parse_ladder_token(tok, ladder)) {
      current.ops.push_back(ladder);
      term_open = true;
      continue;
    }
    if (have_coeff || !current.ops.empty())
      throw ParseError("malformed token '" + tok + "' (coefficients must precede ladder operators)");
    try {
      current.coefficient = detail::parse_coefficient_token(tok);
    } catch (const ParseError&) {
      throw ParseError("malformed token '" + tok + "'");
    }
    have_coeff = true;
    term_open = true;
  }
  if (pending_sign || !term_open) throw ParseError("operator string ends with a dangling sign");
  close_term();
  return op;
}

/// Canonical text: "(re+imj) i^ j + ..." with shortest round-trip coefficients.
inline std::string to_string(const FermionOperator& op) {
  std::string out;
  for (std::size_t t = 0; t < op.terms.size(); ++t) {
    if (t) out += " + ";
    out += format_complex(op.terms[t].coefficient);
    for (const auto& l : op.terms[t].ops)
      out += " " + std::to_string(l.external_index()) + (l.is_create() ? "^" : "");
  }
  return out;
}

inline std::string to_string(const ExcitationTerm& t) { return to_string(FermionOperator{{t}}); }

}  // namespace fqe
