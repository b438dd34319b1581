#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace fqe;
using fqe::testing::max_diff;

namespace {

RdmOptions forced(RdmRoute r) {
  RdmOptions o;
  o.force = r;
  return o;
}

}  // namespace

TEST(Rdm, HartreeFockOneBody) {
  const auto w = initialize(create_wavefunction({SectorTriple{2, 0, 2}}), HartreeFockInit{});
  const auto g = compute_rdm(w, 1, RdmFlavor::spin_summed);
  EXPECT_EQ(g.data.dims, (std::vector<std::size_t>{2, 2}));
  EXPECT_NEAR(std::abs(g.data({0, 0}) - 2.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.data({0, 1})), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.data({1, 1})), 0.0, 1e-15);
}

TEST(Rdm, SpinSummedMatchesOracleAllOrders) {
  const auto w = random_wavefunction(3, {{2, 1}, {1, 1}}, 7);
  const CVector v = to_dense(w);
  for (int k = 1; k <= 4; ++k) {
    const auto ref = oracle::oracle_rdm_spin_summed(v, 3, k);
    EXPECT_LT(max_diff(compute_rdm(w, k, RdmFlavor::spin_summed, forced(RdmRoute::knowles_handy)).data, ref), 1e-11)
        << "kh order " << k;
    EXPECT_LT(max_diff(compute_rdm(w, k, RdmFlavor::spin_summed, forced(RdmRoute::harrison_zarrabian)).data, ref),
              1e-11)
        << "amplitude order " << k;
  }
}

TEST(Rdm, SpinOrbitalMatchesOracle) {
  // sectors with equal n and different S_z exercise the cross-sector terms
  const auto w = random_wavefunction(3, {{2, 1}, {1, 2}, {1, 0}}, 3);
  const CVector v = to_dense(w);
  for (int k = 1; k <= 3; ++k)
    EXPECT_LT(max_diff(compute_rdm(w, k, RdmFlavor::spin_orbital).data, oracle::oracle_rdm_spin_orbital(v, 3, k)),
              1e-11)
        << k;
}

TEST(Rdm, TraceAndContraction) {
  const auto w = random_wavefunction(4, {{2, 1}}, 2);
  const auto g1 = compute_rdm(w, 1, RdmFlavor::spin_summed);
  const auto g2 = compute_rdm(w, 2, RdmFlavor::spin_summed);
  cd tr1 = 0.0, tr2 = 0.0;
  for (std::size_t i = 0; i < 4; ++i) tr1 += g1.data({i, i});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) tr2 += g2.data({i, j, i, j});
  EXPECT_NEAR(std::abs(tr1 - 3.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(tr2 + 6.0), 0.0, 1e-12);  // -n(n-1)

  CMatrix m1(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m1(i, j) = g1.data({std::size_t(i), std::size_t(j)});
  EXPECT_LT((m1 - m1.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m1);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_LT(es.eigenvalues().maxCoeff(), 2.0 + 1e-10);
}

TEST(Rdm, RoutesAgreeAndDispatch) {
  const auto w = random_wavefunction(5, {{1, 1}, {3, 2}}, 4);
  std::vector<RdmRoute> seen;
  RdmOptions opts;
  opts.on_dispatch = [&](const SectorKey&, RdmRoute r) { seen.push_back(r); };
  for (int k = 1; k <= 3; ++k) {
    seen.clear();
    const auto a = compute_rdm(w, k, RdmFlavor::spin_summed, opts);
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0], RdmRoute::harrison_zarrabian);  // n=2 of 10
    EXPECT_EQ(seen[1], RdmRoute::knowles_handy);       // n=5 of 10
    EXPECT_LT(max_diff(a.data, compute_rdm(w, k, RdmFlavor::spin_summed, forced(RdmRoute::knowles_handy)).data), 1e-12);
    EXPECT_LT(max_diff(a.data, compute_rdm(w, k, RdmFlavor::spin_summed, forced(RdmRoute::harrison_zarrabian)).data),
              1e-12);
  }
}

TEST(Rdm, UnsupportedOrders) {
  const auto w = random_wavefunction(3, {{1, 1}}, 1);
  EXPECT_THROW(compute_rdm(w, 5, RdmFlavor::spin_summed), DomainError);
  EXPECT_THROW(compute_rdm(w, 4, RdmFlavor::spin_orbital), DomainError);
  EXPECT_THROW(compute_rdm(w, 0, RdmFlavor::spin_summed), DomainError);
  EXPECT_THROW(hole_rdm(w, 3, RdmFlavor::spin_summed), DomainError);
  const auto big = random_wavefunction(9, {{1, 0}}, 1);
  EXPECT_THROW(compute_rdm(big, 4, RdmFlavor::spin_summed), ResourceError);
}

TEST(HoleRdm, MatchesOracleHoleExpectations) {
  const auto w = random_wavefunction(3, {{2, 1}}, 5);
  const CVector v = to_dense(w);
  const int m = 3;
  const std::size_t so = 2 * m;
  std::vector<oracle::DenseOperator> a, ad;
  for (std::size_t p = 0; p < so; ++p) {
    a.push_back(oracle::jw_ladder_matrix(int(p), false, m));
    ad.push_back(oracle::jw_ladder_matrix(int(p), true, m));
  }
  // spin-orbital: ⟨a_p a†_q⟩ and ⟨a_p a_q a†_r a†_s⟩
  const auto h1 = hole_rdm(w, 1, RdmFlavor::spin_orbital);
  const auto h2 = hole_rdm(w, 2, RdmFlavor::spin_orbital);
  double err1 = 0.0, err2 = 0.0;
  for (std::size_t p = 0; p < so; ++p)
    for (std::size_t q = 0; q < so; ++q) {
      const cd ref = v.dot(a[p].matrix * (ad[q].matrix * v));
      err1 = std::max(err1, std::abs(ref - h1.data({p, q})));
      for (std::size_t r = 0; r < so; ++r)
        for (std::size_t s = 0; s < so; ++s) {
          const cd ref2 = v.dot(a[p].matrix * (a[q].matrix * (ad[r].matrix * (ad[s].matrix * v))));
          err2 = std::max(err2, std::abs(ref2 - h2.data({p, q, r, s})));
        }
    }
  EXPECT_LT(err1, 1e-12);
  EXPECT_LT(err2, 1e-11);

  // spin-summed: Σ_σ ⟨a_iσ a†_jσ⟩ and Σ_στ ⟨a_iσ a_jτ a†_kσ a†_lτ⟩
  const auto s1 = hole_rdm(w, 1, RdmFlavor::spin_summed);
  const auto s2 = hole_rdm(w, 2, RdmFlavor::spin_summed);
  err1 = err2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      cd ref = 0.0;
      for (std::size_t sg = 0; sg < 2; ++sg) ref += h1.data({2 * i + sg, 2 * j + sg});
      err1 = std::max(err1, std::abs(ref - s1.data({i, j})));
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) {
          cd ref2 = 0.0;
          for (std::size_t sg = 0; sg < 2; ++sg)
            for (std::size_t t = 0; t < 2; ++t) ref2 += h2.data({2 * i + sg, 2 * j + t, 2 * k + sg, 2 * l + t});
          err2 = std::max(err2, std::abs(ref2 - s2.data({i, j, k, l})));
        }
    }
  EXPECT_LT(err1, 1e-12);
  EXPECT_LT(err2, 1e-11);
}

TEST(HoleRdm, FullFillingHasNoHoles) {
  const auto w = random_wavefunction(3, {{3, 3}}, 2);
  const auto h = hole_rdm(w, 1, RdmFlavor::spin_summed);
  for (const auto& x : h.data.data) EXPECT_LT(std::abs(x), 1e-13);
}

TEST(Expectation, SimpleValues) {
  const auto hf = initialize(create_wavefunction({SectorTriple{2, 0, 2}}), HartreeFockInit{});
  EXPECT_NEAR(std::abs(expectation(hf, "0^ 0") - 1.0), 0.0, 1e-15);
  Rng rng(3);
  const CMatrix wm = random_hermitian(2, rng);
  // HF occupies orbital 0 twice: Σ W_rs n_r n_s = 4 W_00
  EXPECT_NEAR(std::abs(expectation(hf, Hamiltonian{DiagonalCoulomb{wm}}) - 4.0 * wm(0, 0)), 0.0, 1e-13);
  // terms leaving the wavefunction's sectors contribute nothing
  EXPECT_EQ(expectation(hf, "1^"), cd(0.0, 0.0));
}

TEST(Expectation, OneBodyTableEqualsSpinOrbitalRdm) {
  const auto w = random_wavefunction(3, {{2, 1}, {1, 2}}, 9);
  const auto g = compute_rdm(w, 1, RdmFlavor::spin_orbital);
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q) {
      const cd e = expectation(w, std::to_string(p) + "^ " + std::to_string(q));
      EXPECT_LT(std::abs(e - g.data({p, q})), 1e-12);
    }
}

TEST(Expectation, MatchesOracle) {
  const auto w = random_wavefunction(3, {{1, 2}}, 2);
  const auto op = parse_operator_string("(0.3+0.1j) 4^ 3^ 1 2 - 0.5 2^ 0 + 0.25 5^ 5");
  const cd ref = oracle::oracle_expectation(oracle::jw_matrix(op, 3), to_dense(w));
  EXPECT_LT(std::abs(expectation(w, op) - ref), 1e-13);
  const auto h = Hamiltonian{random_restricted(3, 4)};
  EXPECT_LT(std::abs(expectation(w, h) - oracle::oracle_expectation(oracle::jw_matrix(h, 3), to_dense(w))), 1e-12);
}

TEST(Gradient, MatchesOracleCommutator) {
  const auto w = random_wavefunction(3, {{2, 1}}, 4);
  const auto h = Hamiltonian{random_restricted(3, 7)};
  const auto g = two_body_gradient(w, h);
  const CVector v = to_dense(w);
  const auto hm = oracle::jw_matrix(h, 3);
  const CVector hv = hm.matrix * v;
  double err = 0.0;
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q)
      for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t s = 0; s < 6; ++s) {
          FermionOperator gop{{ExcitationTerm{1.0, {LadderOp::from_external(int(p), LadderKind::create),
                                                   LadderOp::from_external(int(q), LadderKind::create),
                                                   LadderOp::from_external(int(r), LadderKind::annihilate),
                                                   LadderOp::from_external(int(s), LadderKind::annihilate)}}}};
          const auto gm = oracle::jw_matrix(gop, 3);
          const cd ref = hv.dot(gm.matrix * v) - v.dot(gm.matrix * hv);
          err = std::max(err, std::abs(ref - g({p, q, r, s})));
        }
  EXPECT_LT(err, 1e-10);
}

TEST(Gradient, ScalarAndEigenstateGiveZero) {
  const auto w = random_wavefunction(3, {{1, 1}}, 1);
  RestrictedHamiltonian scalar;
  scalar.h1 = CMatrix::Zero(3, 3);
  scalar.v2 = Tensor4(3);
  scalar.e0 = 2.5;
  for (const auto& x : two_body_gradient(w, scalar).data) EXPECT_LT(std::abs(x), 1e-13);

  // ground state of the (1,1) block found by dense diagonalization of the sector matrix
  const auto h = random_restricted(3, 3);
  auto basis = create_wavefunction({SectorTriple{2, 0, 3}});
  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMatrix hm(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    Wavefunction e = basis.zeros_like();
    e.sector({2, 0}).coeff.data()[c] = 1.0;
    const auto he = apply(h, e);
    for (Eigen::Index r = 0; r < dim; ++r) hm(r, c) = he.sector({2, 0}).coeff.data()[r];
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hm);
  Wavefunction gs = basis.zeros_like();
  for (Eigen::Index r = 0; r < dim; ++r) gs.sector({2, 0}).coeff.data()[r] = es.eigenvectors()(r, 0);
  for (const auto& x : two_body_gradient(gs, h).data) EXPECT_LT(std::abs(x), 1e-10);
}

TEST(Gradient, AntiHermitianPattern) {
  const auto w = random_wavefunction(3, {{2, 1}}, 8);
  const auto g = two_body_gradient(w, random_restricted(3, 1));
  double err = 0.0;
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q)
      for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t s = 0; s < 6; ++s)
          err = std::max(err, std::abs(g({p, q, r, s}) + std::conj(g({s, r, q, p}))));
  EXPECT_LT(err, 1e-12);
}
