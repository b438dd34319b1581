#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <array>
#include <bit>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fqe/error.hpp"
#include "fqe/io.hpp"
#include "fqe/operators.hpp"
#include "fqe/wavefunction.hpp"

// Brute-force reference built straight from the Jordan-Wigner definition on the full
// 4^m Fock space: mode 2p is (p, alpha), mode 2p+1 is (p, beta), basis states are
// a†_{k1} a†_{k2} .. |vac⟩ with k1 < k2 < .., and a_k carries (-1)^{#occupied modes below k}.
// Nothing here uses the string graphs of the sector code.

namespace fqe::oracle {

inline constexpr int kMaxOracleOrbitals = 7;

using SparseOp = Eigen::SparseMatrix<cd, Eigen::ColMajor, std::int64_t>;

/// Operator on the full Fock space (stored sparse).
struct DenseOperator {
  int m = 0;
  SparseOp matrix;

  std::size_t dim() const { return std::size_t{1} << (2 * m); }
};

inline void check_size(int m) {
  if (m < 1 || m > kMaxOracleOrbitals)
    throw ResourceError("oracle refuses m=" + std::to_string(m) + " (limit " +
                        std::to_string(kMaxOracleOrbitals) + ")");
}

inline int mode(int orbital, Spin s) { return 2 * orbital + static_cast<int>(s); }

/// a†_k or a_k on one basis state; returns false when the result vanishes.
inline bool jw_ladder(int k, bool create, std::uint64_t& x, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << k;
  if (((x & bit) != 0) == create) return false;
  if (std::popcount(x & (bit - 1)) & 1) sign = -sign;
  x ^= bit;
  return true;
}

namespace detail {

struct Builder {
  int m;
  std::vector<Eigen::Triplet<cd, std::int64_t>> trip;

  /// Adds coefficient · (product of ladder ops, leftmost first).
  void add_string(cd coeff, std::span<const std::pair<int, bool>> ops) {
    if (coeff == cd{0.0, 0.0}) return;
    const std::uint64_t dim = std::uint64_t{1} << (2 * m);
    for (std::uint64_t col = 0; col < dim; ++col) {
      std::uint64_t x = col;
      int sign = 1;
      bool alive = true;
      for (auto it = ops.rbegin(); it != ops.rend() && alive; ++it) alive = jw_ladder(it->first, it->second, x, sign);
      if (alive)
        trip.emplace_back(static_cast<std::int64_t>(x), static_cast<std::int64_t>(col), coeff * static_cast<double>(sign));
    }
  }
  void add_term(const ExcitationTerm& t) {
    std::vector<std::pair<int, bool>> ops;
    for (const auto& op : t.ops) ops.emplace_back(mode(op.orbital, op.spin), op.is_create());
    add_string(t.coefficient, ops);
  }
  void add_identity(cd c) {
    if (c == cd{0.0, 0.0}) return;
    add_string(c, {});
  }
  DenseOperator finish() {
    DenseOperator op{m, SparseOp(static_cast<std::int64_t>(std::uint64_t{1} << (2 * m)),
                                 static_cast<std::int64_t>(std::uint64_t{1} << (2 * m)))};
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
  }
};

inline void add_one_body(Builder& b, const CMatrix& h, std::initializer_list<Spin> spins) {
  for (int i = 0; i < h.rows(); ++i)
    for (int j = 0; j < h.cols(); ++j)
      for (Spin s : spins) {
        const std::array<std::pair<int, bool>, 2> ops{{{mode(i, s), true}, {mode(j, s), false}}};
        b.add_string(h(i, j), ops);
      }
}

/// Σ V_ijkl a†_iσ a†_jρ a_kσ a_lρ
inline void add_two_body(Builder& b, const Tensor4& v, Spin sigma, Spin rho) {
  const int m = v.m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          const std::array<std::pair<int, bool>, 4> ops{
              {{mode(i, sigma), true}, {mode(j, rho), true}, {mode(k, sigma), false}, {mode(l, rho), false}}};
          b.add_string(v(i, j, k, l), ops);
        }
}

}  // namespace detail

inline DenseOperator jw_matrix(const ExcitationTerm& t, int m) {
  check_size(m);
  if (t.max_orbital() >= m) throw DomainError("jw_matrix: term exceeds m");
  detail::Builder b{m, {}};
  b.add_term(t);
  return b.finish();
}

inline DenseOperator jw_matrix(const FermionOperator& op, int m) {
  check_size(m);
  detail::Builder b{m, {}};
  for (const auto& t : op.terms) {
    if (t.max_orbital() >= m) throw DomainError("jw_matrix: term exceeds m");
    b.add_term(t);
  }
  return b.finish();
}

inline DenseOperator jw_matrix(const Hamiltonian& h, int m) {
  check_size(m);
  detail::Builder b{m, {}};
  struct Visitor {
    detail::Builder& b;
    int m;
    void operator()(const SparseHamiltonian& s) const {
      for (const auto& t : s.generator.terms) {
        b.add_term(t);
        b.add_term(t.adjoint());
      }
    }
    void operator()(const DiagonalCoulomb& d) const {
      const std::uint64_t dim = std::uint64_t{1} << (2 * m);
      for (std::uint64_t x = 0; x < dim; ++x) {
        cd e = 0.0;
        for (int r = 0; r < m; ++r)
          for (int s = 0; s < m; ++s) {
            const int nr = static_cast<int>((x >> (2 * r)) & 1) + static_cast<int>((x >> (2 * r + 1)) & 1);
            const int ns = static_cast<int>((x >> (2 * s)) & 1) + static_cast<int>((x >> (2 * s + 1)) & 1);
            e += d.w(r, s) * static_cast<double>(nr * ns);
          }
        if (e != cd{0.0, 0.0}) b.trip.emplace_back(static_cast<std::int64_t>(x), static_cast<std::int64_t>(x), e);
      }
    }
    void operator()(const QuadraticHamiltonian& q) const { detail::add_one_body(b, q.a, {Spin::alpha, Spin::beta}); }
    void operator()(const RestrictedHamiltonian& r) const {
      b.add_identity(r.e0);
      detail::add_one_body(b, r.h1, {Spin::alpha, Spin::beta});
      for (Spin s : {Spin::alpha, Spin::beta})
        for (Spin t : {Spin::alpha, Spin::beta}) detail::add_two_body(b, r.v2, s, t);
    }
    void operator()(const SSOHamiltonian& s) const {
      b.add_identity(s.e0);
      detail::add_one_body(b, s.h1a, {Spin::alpha});
      detail::add_one_body(b, s.h1b, {Spin::beta});
      detail::add_two_body(b, s.v_aa, Spin::alpha, Spin::alpha);
      detail::add_two_body(b, s.v_bb, Spin::beta, Spin::beta);
      detail::add_two_body(b, s.v_ab, Spin::alpha, Spin::beta);
      Tensor4 vba(s.v_ab.m);
      for (int i = 0; i < vba.m; ++i)
        for (int j = 0; j < vba.m; ++j)
          for (int k = 0; k < vba.m; ++k)
            for (int l = 0; l < vba.m; ++l) vba(i, j, k, l) = s.v_ab(j, i, l, k);
      detail::add_two_body(b, vba, Spin::beta, Spin::alpha);
    }
  };
  if (required_orbitals(h) > m) throw DomainError("jw_matrix: Hamiltonian exceeds m");
  std::visit(Visitor{b, m}, h);
  return b.finish();
}

/// Single ladder operator on a spin-orbital mode 2p+σ.
inline DenseOperator jw_ladder_matrix(int mode_index, bool create, int m) {
  check_size(m);
  detail::Builder b{m, {}};
  const std::array<std::pair<int, bool>, 1> ops{{{mode_index, create}}};
  b.add_string(1.0, ops);
  return b.finish();
}

inline double hermiticity_residual(const DenseOperator& op) {
  const SparseOp diff = op.matrix - SparseOp(op.matrix.adjoint());
  double r = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseOp::InnerIterator it(diff, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

inline cd oracle_expectation(const DenseOperator& op, const CVector& v) {
  if (static_cast<std::size_t>(v.size()) != op.dim()) throw DomainError("oracle_expectation: dimension mismatch");
  return v.dot(op.matrix * v);
}

inline CVector oracle_apply(const DenseOperator& op, const CVector& v) {
  if (static_cast<std::size_t>(v.size()) != op.dim()) throw DomainError("oracle_apply: dimension mismatch");
  return op.matrix * v;
}

inline constexpr std::size_t kEigenEvolveMaxDim = 1024;

/// e^{-iMt} v: eigendecomposition up to dimension 1024, otherwise a stepped Taylor series
/// with steps of norm-bound · dt ≤ 1 taken to machine precision.
inline CVector oracle_evolve(double t, const DenseOperator& op, const CVector& v) {
  if (static_cast<std::size_t>(v.size()) != op.dim()) throw DomainError("oracle_evolve: dimension mismatch");
  if (hermiticity_residual(op) > 1.0e-12) throw DomainError("oracle_evolve: operator is not Hermitian");
  if (t == 0.0) return v;
  if (op.dim() <= kEigenEvolveMaxDim) {
    const Eigen::MatrixXcd dense(op.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
    const Eigen::VectorXcd phases =
        (es.eigenvalues().cast<cd>() * cd{0.0, -t}).array().exp().matrix();
    return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * v));
  }
  double bound = 0.0;
  for (int k = 0; k < op.matrix.outerSize(); ++k) {
    double col = 0.0;
    for (SparseOp::InnerIterator it(op.matrix, k); it; ++it) col += std::abs(it.value());
    bound = std::max(bound, col);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) * bound)));
  const double dt = t / steps;
  CVector cur = v;
  for (int s = 0; s < steps; ++s) {
    CVector term = cur;
    CVector acc = cur;
    for (int n = 1; n < 200; ++n) {
      term = (op.matrix * term) * cd{0.0, -dt / n};
      acc += term;
      if (term.norm() < 1.0e-17 * std::max(1.0, acc.norm())) break;
    }
    cur = acc;
  }
  return cur;
}

/// Basis states of the full space with the given particle numbers.
inline std::vector<std::uint64_t> sector_basis(int m, int n_alpha, int n_beta) {
  std::vector<std::uint64_t> out;
  const std::uint64_t dim = std::uint64_t{1} << (2 * m);
  for (std::uint64_t x = 0; x < dim; ++x) {
    int na = 0, nb = 0;
    for (int p = 0; p < m; ++p) {
      na += static_cast<int>((x >> (2 * p)) & 1);
      nb += static_cast<int>((x >> (2 * p + 1)) & 1);
    }
    if (na == n_alpha && nb == n_beta) out.push_back(x);
  }
  return out;
}

/// Eigenvalues of the operator restricted to one (n_alpha, n_beta) block, or the whole space.
inline Eigen::VectorXd spectrum(const DenseOperator& op, std::optional<std::pair<int, int>> counts = std::nullopt) {
  Eigen::MatrixXcd dense(op.matrix);
  if (counts) {
    const auto basis = sector_basis(op.m, counts->first, counts->second);
    Eigen::MatrixXcd sub(basis.size(), basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = 0; j < basis.size(); ++j)
        sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            dense(static_cast<Eigen::Index>(basis[i]), static_cast<Eigen::Index>(basis[j]));
    dense = sub;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// ⟨v| a†_p1 .. a†_pk a_q1 .. a_qk |v⟩ over spin-orbital modes, as ⟨a_pk..a_p1 v | a_q1..a_qk v⟩.
inline Tensor oracle_rdm_spin_orbital(const CVector& v, int m, int k) {
  check_size(m);
  const std::size_t so = 2 * static_cast<std::size_t>(m);
  std::size_t count = 1;
  for (int t = 0; t < k; ++t) count *= so;
  std::vector<DenseOperator> ann;
  for (std::size_t p = 0; p < so; ++p) ann.push_back(jw_ladder_matrix(static_cast<int>(p), false, m));
  auto digits = [&](std::size_t idx) {
    std::vector<std::size_t> d(static_cast<std::size_t>(k));
    for (int t = k - 1; t >= 0; --t) {
      d[static_cast<std::size_t>(t)] = idx % so;
      idx /= so;
    }
    return d;
  };
  std::vector<CVector> ket(count), bra(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const auto d = digits(idx);
    CVector x = v;
    for (int t = k - 1; t >= 0; --t) x = ann[d[static_cast<std::size_t>(t)]].matrix * x;  // a_q1 .. a_qk v
    ket[idx] = x;
    CVector y = v;
    for (int t = 0; t < k; ++t) y = ann[d[static_cast<std::size_t>(t)]].matrix * y;  // a_pk .. a_p1 v
    bra[idx] = y;
  }
  Tensor out(std::vector<std::size_t>(static_cast<std::size_t>(2 * k), so));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) out.data[i * count + j] = bra[i].dot(ket[j]);
  return out;
}

/// Hole tensor ⟨a_p1 .. a_pk a†_q1 .. a†_qk⟩ over spin-orbital modes.
inline Tensor oracle_hole_rdm_spin_orbital(const CVector& v, int m, int k) {
  check_size(m);
  const std::size_t so = 2 * static_cast<std::size_t>(m);
  std::size_t count = 1;
  for (int t = 0; t < k; ++t) count *= so;
  std::vector<DenseOperator> cre;
  for (std::size_t p = 0; p < so; ++p) cre.push_back(jw_ladder_matrix(static_cast<int>(p), true, m));
  std::vector<CVector> ket(count), bra(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::vector<std::size_t> d(static_cast<std::size_t>(k));
    for (std::size_t r = idx, t = static_cast<std::size_t>(k); t-- > 0; r /= so) d[t] = r % so;
    CVector x = v;
    for (int t = k - 1; t >= 0; --t) x = cre[d[static_cast<std::size_t>(t)]].matrix * x;  // a†_q1 .. a†_qk v
    ket[idx] = x;
    CVector y = v;
    for (int t = 0; t < k; ++t) y = cre[d[static_cast<std::size_t>(t)]].matrix * y;
    bra[idx] = y;  // a†_pk .. a†_p1 v
  }
  Tensor out(std::vector<std::size_t>(static_cast<std::size_t>(2 * k), so));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) out.data[i * count + j] = bra[i].dot(ket[j]);
  return out;
}

/// Spin-summed tensor from a spin-orbital one: Σ over σ_t shared by i_t and j_t.
inline Tensor spin_sum(const Tensor& so, int m, int k) {
  const auto mm = static_cast<std::size_t>(m);
  std::size_t mk = 1, sok = 1;
  for (int t = 0; t < k; ++t) {
    mk *= mm;
    sok *= 2 * mm;
  }
  Tensor out(std::vector<std::size_t>(static_cast<std::size_t>(2 * k), mm));
  for (std::size_t i = 0; i < mk; ++i)
    for (std::size_t j = 0; j < mk; ++j)
      for (int spins = 0; spins < (1 << k); ++spins) {
        std::size_t pi = 0, pj = 0;
        for (int t = 0; t < k; ++t) {
          std::size_t div = 1;
          for (int u = t + 1; u < k; ++u) div *= mm;
          const std::size_t s = static_cast<std::size_t>((spins >> t) & 1);
          pi = pi * 2 * mm + 2 * ((i / div) % mm) + s;
          pj = pj * 2 * mm + 2 * ((j / div) % mm) + s;
        }
        out.data[i * mk + j] += so.data[pi * sok + pj];
      }
  return out;
}

inline Tensor oracle_rdm_spin_summed(const CVector& v, int m, int k) {
  return spin_sum(oracle_rdm_spin_orbital(v, m, k), m, k);
}

}  // namespace fqe::oracle
