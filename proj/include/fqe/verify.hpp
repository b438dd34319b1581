#pragma once

// Oracle-equivalence sweep: every sector kernel against the dense Jordan-Wigner
// matrices on random data at one orbital count.

#include <cstdint>
#include <string>
#include <vector>

#include "fqe/apply.hpp"
#include "fqe/evolve.hpp"
#include "fqe/oracle.hpp"
#include "fqe/random.hpp"
#include "fqe/rdm.hpp"

namespace fqe {

inline constexpr int kMaxVerifyOrbitals = 4;
inline constexpr int kMaxVerifyElectrons = 4;
inline constexpr double kExactTolerance = 1.0e-12;
inline constexpr double kSeriesTolerance = 1.0e-10;

struct VerifyCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  int m = 0;
  std::uint64_t seed = 0;
  std::vector<VerifyCheck> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

namespace detail {

inline double vec_diff(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline double tensor_diff(const Tensor& a, const Tensor& b) {
  if (a.dims != b.dims) return std::numeric_limits<double>::infinity();
  double r = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) r = std::max(r, std::abs(a.data[i] - b.data[i]));
  return r;
}

inline CVector project_onto(const CVector& v, const Wavefunction& w) {
  CVector out = v;
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    const auto [a, b] = deinterleave(static_cast<std::uint64_t>(x));
    if (!w.has_sector(SectorKey::from_counts(popcount(a), popcount(b)))) out(x) = 0.0;
  }
  return out;
}

inline std::vector<std::pair<int, int>> verify_sectors(int m) {
  std::vector<std::pair<int, int>> out;
  for (int na = 0; na <= m; ++na)
    for (int nb = 0; nb <= m; ++nb)
      if (na + nb <= kMaxVerifyElectrons) out.emplace_back(na, nb);
  return out;
}

inline Wavefunction random_state(int m, const std::vector<std::pair<int, int>>& counts, std::uint64_t seed) {
  std::vector<SectorTriple> t;
  for (auto [na, nb] : counts) t.push_back({na + nb, na - nb, m});
  return initialize(create_wavefunction(t), RandomInit{seed});
}

inline cd random_coefficient(Rng& rng) {
  const cd z = rng.complex_normal();
  return z / std::max(std::abs(z), 0.1);
}

/// Random product of 1..4 ladder operators on arbitrary modes.
inline ExcitationTerm random_term(int m, Rng& rng) {
  const int len = 1 + rng.below(4);
  ExcitationTerm t;
  t.coefficient = random_coefficient(rng);
  for (int i = 0; i < len; ++i) {
    const int mode = rng.below(2 * m);
    t.ops.push_back(LadderOp::from_external(mode, (rng.next() & 1) ? LadderKind::create : LadderKind::annihilate));
  }
  return t;
}

/// Random number- and S_z-conserving term: a†_p a_q, or a†_p a†_q a_r a_s with matching spins.
inline ExcitationTerm random_conserving_term(int m, Rng& rng, bool two_body) {
  auto orb = [&] { return rng.below(m); };
  auto spin = [&] { return (rng.next() & 1) ? Spin::beta : Spin::alpha; };
  ExcitationTerm t;
  t.coefficient = random_coefficient(rng);
  const Spin s1 = spin();
  if (!two_body) {
    t.ops = {cre(orb(), s1), des(orb(), s1)};
    return t;
  }
  const Spin s2 = spin();
  t.ops = {cre(orb(), s1), cre(orb(), s2), des(orb(), s1), des(orb(), s2)};
  return t;
}

}  // namespace detail

/// Runs the full oracle comparison at m orbitals (all sectors with n ≤ 4) and reports the
/// maximum residual per property.
inline VerifyReport run_verification(int m, std::uint64_t seed) {
  if (m < 1) throw DomainError("verification needs at least one orbital");
  if (m > kMaxVerifyOrbitals)
    throw ResourceError("verification is limited to m <= " + std::to_string(kMaxVerifyOrbitals) + " (requested " +
                        std::to_string(m) + ")");
  using namespace detail;
  VerifyReport rep;
  rep.m = m;
  rep.seed = seed;
  auto record = [&](std::string name, double residual, double tol) {
    rep.checks.push_back({std::move(name), residual, tol, residual <= tol});
  };

  Rng rng(seed);
  const auto sectors = verify_sectors(m);
  const Wavefunction all = random_state(m, sectors, seed + 1);
  const CVector all_dense = to_dense(all);

  const RestrictedHamiltonian rh = random_restricted(m, seed + 2);
  const SSOHamiltonian sso = random_sso(m, seed + 3);
  const auto rh_op = oracle::jw_matrix(Hamiltonian{rh}, m);
  const auto sso_op = oracle::jw_matrix(Hamiltonian{sso}, m);

  // individual ladder products, including sector-changing ones
  {
    double r = 0.0;
    for (int i = 0; i < 24; ++i) {
      const ExcitationTerm t = random_term(m, rng);
      const CVector ref = project_onto(oracle::oracle_apply(oracle::jw_matrix(t, m), all_dense), all);
      r = std::max(r, vec_diff(to_dense(apply_term(t, all, MissingSector::drop)), ref));
    }
    record("apply_term", r, kExactTolerance);
  }

  // dense Hamiltonians, sector by sector
  {
    double kh = 0.0, hz = 0.0, olsen = 0.0, ss = 0.0, disp = 0.0;
    std::uint64_t s = seed + 100;
    for (const auto& counts : sectors) {
      const Wavefunction w = random_state(m, {counts}, s++);
      const CVector v = to_dense(w);
      const CVector ref = oracle::oracle_apply(rh_op, v);
      kh = std::max(kh, vec_diff(to_dense(apply_dense_kh(rh, w)), ref));
      if (counts.first + counts.second >= 2) hz = std::max(hz, vec_diff(to_dense(apply_dense_hz(rh, w)), ref));
      olsen = std::max(olsen, vec_diff(to_dense(apply_dense_olsen(rh, w)), ref));
      disp = std::max(disp, vec_diff(to_dense(apply_dense(rh, w)), ref));
      ss = std::max(ss, vec_diff(to_dense(apply_dense_sso(sso, w)), oracle::oracle_apply(sso_op, v)));
    }
    record("apply_dense_knowles_handy", kh, kExactTolerance);
    record("apply_dense_harrison_zarrabian", hz, kExactTolerance);
    record("apply_dense_olsen", olsen, kExactTolerance);
    record("apply_dense_dispatch", disp, kExactTolerance);
    record("apply_dense_spin_orbital", ss, kExactTolerance);
  }

  const DiagonalCoulomb dc{random_hermitian(m, rng)};
  const QuadraticHamiltonian quad{random_hermitian(m, rng)};
  FermionOperator gen;
  for (int i = 0; i < 4; ++i) gen.terms.push_back(random_conserving_term(m, rng, i % 2 == 1));
  const SparseHamiltonian sparse{gen};
  const auto dc_op = oracle::jw_matrix(Hamiltonian{dc}, m);
  const auto quad_op = oracle::jw_matrix(Hamiltonian{quad}, m);
  const auto sparse_op = oracle::jw_matrix(Hamiltonian{sparse}, m);

  record("apply_diagonal_coulomb",
         vec_diff(to_dense(apply_diagonal_coulomb(dc, all)), oracle::oracle_apply(dc_op, all_dense)), kExactTolerance);
  record("apply_quadratic", vec_diff(to_dense(apply_quadratic(quad, all)), oracle::oracle_apply(quad_op, all_dense)),
         kExactTolerance);
  record("apply_sparse", vec_diff(to_dense(apply_sparse(sparse, all)), oracle::oracle_apply(sparse_op, all_dense)),
         kExactTolerance);

  // evolution paths
  {
    double r = 0.0;
    for (int i = 0; i < 6; ++i) {
      const ExcitationTerm t = random_conserving_term(m, rng, i % 2 == 1);
      const auto op = oracle::jw_matrix(Hamiltonian{SparseHamiltonian{FermionOperator{{t}}}}, m);
      for (double eps : {0.1, 1.0})
        r = std::max(r, vec_diff(to_dense(evolve_excitation(eps, t, all)), oracle::oracle_evolve(eps, op, all_dense)));
    }
    record("evolve_excitation", r, kExactTolerance);
  }
  const double t = 0.7;
  record("evolve_diagonal_coulomb",
         vec_diff(to_dense(evolve_diagonal_coulomb(t, dc, all)), oracle::oracle_evolve(t, dc_op, all_dense)),
         kExactTolerance);
  record("evolve_quadratic",
         vec_diff(to_dense(evolve_quadratic(t, quad, all)), oracle::oracle_evolve(t, quad_op, all_dense)),
         kExactTolerance);
  {
    const SeriesControl ctrl;
    const CVector ref = oracle::oracle_evolve(t, rh_op, all_dense);
    record("evolve_taylor", vec_diff(to_dense(evolve_taylor(t, Hamiltonian{rh}, ctrl, all)), ref), kSeriesTolerance);
    const Eigen::VectorXd spec = oracle::spectrum(rh_op);
    const SpectralWindow win{spec.minCoeff(), spec.maxCoeff(), 0.9875};
    record("evolve_chebyshev", vec_diff(to_dense(evolve_chebyshev(t, Hamiltonian{rh}, win, ctrl, all)), ref),
           kSeriesTolerance);
    record("evolve_sparse",
           vec_diff(to_dense(evolve_sparse(t, sparse, ctrl, all)), oracle::oracle_evolve(t, sparse_op, all_dense)),
           kSeriesTolerance);
  }

  // reduced density matrices
  for (int k = 1; k <= 3; ++k) {
    RdmOptions kh, amp;
    kh.force = RdmRoute::knowles_handy;
    amp.force = RdmRoute::harrison_zarrabian;
    const Tensor so_ref = oracle::oracle_rdm_spin_orbital(all_dense, m, k);
    const Tensor ss_ref = oracle::spin_sum(so_ref, m, k);
    const double r = std::max(tensor_diff(compute_rdm(all, k, RdmFlavor::spin_summed, kh).data, ss_ref),
                              tensor_diff(compute_rdm(all, k, RdmFlavor::spin_summed, amp).data, ss_ref));
    record("rdm_spin_summed_order" + std::to_string(k), r, kExactTolerance);
    record("rdm_spin_orbital_order" + std::to_string(k),
           tensor_diff(compute_rdm(all, k, RdmFlavor::spin_orbital).data, so_ref), kExactTolerance);
  }
  for (int k = 1; k <= 2; ++k) {
    const Tensor so_ref = oracle::oracle_hole_rdm_spin_orbital(all_dense, m, k);
    record("hole_rdm_spin_orbital_order" + std::to_string(k),
           tensor_diff(hole_rdm(all, k, RdmFlavor::spin_orbital).data, so_ref), kExactTolerance);
    record("hole_rdm_spin_summed_order" + std::to_string(k),
           tensor_diff(hole_rdm(all, k, RdmFlavor::spin_summed).data, oracle::spin_sum(so_ref, m, k)),
           kExactTolerance);
  }

  // expectation values and the two-body gradient
  {
    FermionOperator op;
    for (int i = 0; i < 8; ++i) op.terms.push_back(random_term(m, rng));
    const double r1 =
        std::abs(expectation(all, op) - oracle::oracle_expectation(oracle::jw_matrix(op, m), all_dense));
    const double r2 = std::abs(expectation(all, Hamiltonian{rh}) - oracle::oracle_expectation(rh_op, all_dense));
    record("expectation", std::max(r1, r2), kExactTolerance);
  }
  {
    const Tensor g = two_body_gradient(all, Hamiltonian{rh});
    const CVector hv = oracle::oracle_apply(rh_op, all_dense);
    const std::size_t so = 2 * static_cast<std::size_t>(m);
    std::vector<oracle::SparseOp> ann;
    for (std::size_t p = 0; p < so; ++p) ann.push_back(oracle::jw_ladder_matrix(static_cast<int>(p), false, m).matrix);
    // x[(r,s)] = a_r a_s Ψ, y[(r,s)] = a_r a_s ĤΨ
    std::vector<CVector> x(so * so), y(so * so);
    for (std::size_t r = 0; r < so; ++r)
      for (std::size_t s = 0; s < so; ++s) {
        x[r * so + s] = ann[r] * (ann[s] * all_dense);
        y[r * so + s] = ann[r] * (ann[s] * hv);
      }
    double res = 0.0;
    for (std::size_t p = 0; p < so; ++p)
      for (std::size_t q = 0; q < so; ++q)
        for (std::size_t r = 0; r < so; ++r)
          for (std::size_t s = 0; s < so; ++s) {
            const cd ref = y[q * so + p].dot(x[r * so + s]) - x[q * so + p].dot(y[r * so + s]);
            res = std::max(res, std::abs(ref - g.data[((p * so + q) * so + r) * so + s]));
          }
    record("two_body_gradient", res, kExactTolerance);
  }
  return rep;
}

}  // namespace fqe
