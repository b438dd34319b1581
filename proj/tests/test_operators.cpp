#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace fqe;
using fqe::testing::max_diff;
using fqe::testing::tmp_dir;

namespace {

Eigen::MatrixXcd dense(const oracle::DenseOperator& op) { return Eigen::MatrixXcd(op.matrix); }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(Parser, SingleExcitations) {
  const auto a = parse_operator_string("2^ 0");
  ASSERT_EQ(a.terms.size(), 1u);
  EXPECT_EQ(a.terms[0].coefficient, cd(1.0, 0.0));
  EXPECT_EQ(a.terms[0].ops, (std::vector<LadderOp>{cre(1, Spin::alpha), des(0, Spin::alpha)}));

  const auto b = parse_operator_string("3^ 1");
  EXPECT_EQ(b.terms[0].ops, (std::vector<LadderOp>{cre(1, Spin::beta), des(0, Spin::beta)}));
  EXPECT_EQ(b.terms[0].particle_change(), std::make_pair(0, 0));
}

TEST(Parser, CoefficientsAndSums) {
  const auto op = parse_operator_string("(0.5-2j) 4^ 3 - 1.5 0^ 0 + 2j 1^");
  ASSERT_EQ(op.terms.size(), 3u);
  EXPECT_EQ(op.terms[0].coefficient, cd(0.5, -2.0));
  EXPECT_EQ(op.terms[1].coefficient, cd(-1.5, 0.0));
  EXPECT_EQ(op.terms[2].coefficient, cd(0.0, 2.0));
  EXPECT_EQ(op.terms[2].particle_change(), std::make_pair(0, 1));
}

TEST(Parser, NilpotentString) {
  const auto op = parse_operator_string("0^ 0^");
  EXPECT_TRUE(op.terms[0].is_nilpotent());
  EXPECT_LT(dense(oracle::jw_matrix(op, 1)).norm(), 1e-15);
  const auto w = random_wavefunction(1, {{0, 0}, {1, 0}, {1, 1}}, 3);
  EXPECT_EQ(to_dense(apply_operator(op, w)).norm(), 0.0);
  EXPECT_FALSE(parse_operator_string("0^ 0").terms[0].is_nilpotent());
}

TEST(Parser, MalformedInput) {
  for (const char* bad : {"", "   ", "2^ x", "-1^ 0", "2^ 0 1.5", "2^ 0 +", "+ - 2^", "0.5 0.5 1^", "2^^ 0",
                          "(1+2j 0^", "99999999999999999999^"})
    EXPECT_THROW(parse_operator_string(bad), ParseError) << "'" << bad << "'";
}

TEST(Parser, CanonicalRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    FermionOperator op;
    const int nterms = 1 + rng.below(4);
    for (int t = 0; t < nterms; ++t) {
      ExcitationTerm term;
      term.coefficient = rng.complex_normal();
      const int len = rng.below(5);
      for (int k = 0; k < len; ++k)
        term.ops.push_back(LadderOp::from_external(rng.below(12), rng.below(2) ? LadderKind::create
                                                                               : LadderKind::annihilate));
      op.terms.push_back(term);
    }
    const std::string text = to_string(op);
    EXPECT_EQ(parse_operator_string(text), op) << text;
    EXPECT_EQ(to_string(parse_operator_string(text)), text);
  }
}

TEST(Classify, Kinds) {
  Rng rng(1);
  EXPECT_EQ(classify(Hamiltonian{DiagonalCoulomb{random_hermitian(3, rng)}}), HamiltonianKind::diagonal_coulomb);
  EXPECT_EQ(classify(Hamiltonian{QuadraticHamiltonian{random_hermitian(3, rng)}}), HamiltonianKind::quadratic);
  EXPECT_EQ(classify(Hamiltonian{random_restricted(3, 2)}), HamiltonianKind::restricted_dense);
  EXPECT_EQ(classify(Hamiltonian{random_sso(3, 2)}), HamiltonianKind::sso_dense);
  EXPECT_EQ(classify(Hamiltonian{SparseHamiltonian{parse_operator_string("0^ 0 2^ 2")}}),
            HamiltonianKind::diagonal_number_poly);
  EXPECT_EQ(classify(Hamiltonian{SparseHamiltonian{parse_operator_string("4^ 0")}}), HamiltonianKind::sparse);
  // same orbital, different ladder order: still diagonal
  EXPECT_EQ(classify(parse_operator_string("0 0^ 3^ 3")), HamiltonianKind::diagonal_number_poly);
}

TEST(Classify, StableUnderReorderingAndScaling) {
  const std::vector<std::string> terms{"0^ 0 2^ 2", "1^ 1", "3^ 3 1^ 1", "5^ 4^ 4 5"};
  std::vector<std::string> perm = terms;
  std::sort(perm.begin(), perm.end());
  do {
    std::string text;
    for (const auto& t : perm) text += (text.empty() ? "" : " + ") + std::string("-2.5 ") + t;
    EXPECT_EQ(classify(parse_operator_string(text)), HamiltonianKind::diagonal_number_poly) << text;
    EXPECT_EQ(classify(parse_operator_string(text + " + 0.1 2^ 0")), HamiltonianKind::sparse) << text;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Classify, DiagonalTermsAreDiagonalMatrices) {
  for (const char* text : {"0^ 0 2^ 2", "0 0^", "3^ 1^ 1 3", "(0.5+1j) 2^ 2 2^ 2"}) {
    const auto op = parse_operator_string(text);
    ASSERT_EQ(classify(op), HamiltonianKind::diagonal_number_poly);
    const auto d = dense(oracle::jw_matrix(op, 2));
    EXPECT_LT((d - Eigen::MatrixXcd(d.diagonal().asDiagonal())).norm(), 1e-15) << text;
  }
}

TEST(SparseHamiltonian, HermitizedGenerator) {
  const int m = 3;
  const auto gen = parse_operator_string("(0.4-0.3j) 4^ 2^ 3 1 + 0.7 2^ 0 + (0.2+0.9j) 5^ 0 + 1.5j 0^ 0");
  const auto g = dense(oracle::jw_matrix(gen, m));
  const Eigen::MatrixXcd h = g + g.adjoint();
  EXPECT_LT(oracle::hermiticity_residual(oracle::jw_matrix(Hamiltonian{SparseHamiltonian{gen}}, m)), 1e-15);

  const auto w = random_wavefunction(m, {{2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}, 8);
  const CVector expected = h * to_dense(w);
  EXPECT_LT(max_diff(to_dense(apply_sparse(SparseHamiltonian{gen}, w)), expected), 1e-13);
}

TEST(Fcidump, MinimalFile) {
  const auto dir = tmp_dir("operators");
  const auto path = dir / "min.fcidump";
  write_file(path, " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n"
                   "  0.5 1 1 1 1\n -1.25D0 1 1 0 0\n 0.3 2 1 0 0\n 0.75 0 0 0 0\n");
  FcidumpHeader hdr;
  const auto h = load_fcidump(path.string(), &hdr);
  EXPECT_EQ(hdr.norb, 2);
  EXPECT_EQ(hdr.nelec, 2);
  EXPECT_EQ(h.h1.rows(), 2);
  EXPECT_EQ(h.h1.cols(), 2);
  EXPECT_EQ(h.v2.data.size(), 16u);
  EXPECT_EQ(h.e0, 0.75);
  EXPECT_EQ(h.h1(0, 0), cd(-1.25, 0));
  EXPECT_EQ(h.h1(0, 1), cd(0.3, 0));
  EXPECT_EQ(h.h1(1, 0), cd(0.3, 0));
  // (11|11) = 0.5 is the only integral; V_pqrs = -½ (pr|qs)
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          EXPECT_EQ(h.v2(p, q, r, s), cd(p + q + r + s == 0 ? -0.25 : 0.0, 0.0));
}

TEST(Fcidump, SymmetryImagesFilled) {
  const auto path = tmp_dir("operators") / "sym.fcidump";
  write_file(path, "&FCI NORB=3,NELEC=2,MS2=0 /\n 0.5 2 1 3 1\n");
  const auto h = load_fcidump(path.string());
  // (ij|kl) = 0.5 for all 8 images of (21|31) (0-based (10|20))
  int nonzero = 0;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
          if (h.v2(p, q, r, s) != cd{}) {
            ++nonzero;
            EXPECT_EQ(h.v2(p, q, r, s), cd(-0.25, 0.0));
          }
  EXPECT_EQ(nonzero, 8);
  EXPECT_EQ(h.v2(1, 2, 0, 0), cd(-0.25, 0.0));  // (10|20)
  EXPECT_EQ(h.v2(0, 0, 1, 2), cd(-0.25, 0.0));  // (01|02)
}

TEST(Fcidump, BadFiles) {
  const auto dir = tmp_dir("operators");
  const std::vector<std::pair<std::string, std::string>> cases{
      {"range.fcidump", "&FCI NORB=2,NELEC=2,MS2=0 &END\n 0.5 3 1 1 1\n"},
      {"nohead.fcidump", " 0.5 1 1 1 1\n"},
      {"unterminated.fcidump", "&FCI NORB=2,NELEC=2,MS2=0\n"},
      {"nonorb.fcidump", "&FCI NELEC=2,MS2=0 &END\n"},
      {"value.fcidump", "&FCI NORB=2,NELEC=2,MS2=0 &END\n 0.5x 1 1 1 1\n"},
      {"short.fcidump", "&FCI NORB=2,NELEC=2,MS2=0 &END\n 0.5 1 1\n"},
  };
  for (const auto& [name, text] : cases) {
    write_file(dir / name, text);
    EXPECT_THROW(load_fcidump((dir / name).string()), FormatError) << name;
  }
  EXPECT_THROW(load_fcidump((dir / "missing.fcidump").string()), FormatError);
}

TEST(Fcidump, ChemistsNotationMatchesLadderProducts) {
  // build ½ Σ (ij|kl) a†_iσ a†_kτ a_lτ a_jσ + Σ h_ij a†_iσ a_jσ + E0 directly from ladder matrices
  const int m = 3;
  Rng rng(17);
  std::vector<double> eri(m * m * m * m, 0.0);
  auto at = [&](int i, int j, int k, int l) -> double& { return eri[((i * m + j) * m + k) * m + l]; };
  std::string text = "&FCI NORB=3,NELEC=4,MS2=0,\n ORBSYM=1,1,1,\n ISYM=1,\n&END\n";
  char buf[128];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l <= k; ++l) {
          if (i * m + j < k * m + l) continue;
          const double v = rng.normal() * 0.3;
          for (auto [a, b, c, d] : {std::array{i, j, k, l}, std::array{j, i, k, l}, std::array{i, j, l, k},
                                    std::array{j, i, l, k}, std::array{k, l, i, j}, std::array{l, k, i, j},
                                    std::array{k, l, j, i}, std::array{l, k, j, i}})
            at(a, b, c, d) = v;
          std::snprintf(buf, sizeof buf, " %.17g %d %d %d %d\n", v, i + 1, j + 1, k + 1, l + 1);
          text += buf;
        }
  Eigen::MatrixXd h1(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      h1(i, j) = h1(j, i) = rng.normal();
      std::snprintf(buf, sizeof buf, " %.17g %d %d 0 0\n", h1(i, j), i + 1, j + 1);
      text += buf;
    }
  text += " -1.5 0 0 0 0\n";
  const auto path = tmp_dir("operators") / "chem.fcidump";
  write_file(path, text);
  const auto ham = load_fcidump(path.string());

  const int dim = 1 << (2 * m);
  std::vector<Eigen::MatrixXcd> cr(2 * m), an(2 * m);
  for (int x = 0; x < 2 * m; ++x) {
    cr[x] = dense(oracle::jw_ladder_matrix(x, true, m));
    an[x] = dense(oracle::jw_ladder_matrix(x, false, m));
  }
  Eigen::MatrixXcd ref = -1.5 * Eigen::MatrixXcd::Identity(dim, dim);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int s = 0; s < 2; ++s) ref += h1(i, j) * cr[2 * i + s] * an[2 * j + s];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t)
              ref += 0.5 * at(i, j, k, l) * cr[2 * i + s] * cr[2 * k + t] * an[2 * l + t] * an[2 * j + s];

  const auto got = dense(oracle::jw_matrix(Hamiltonian{ham}, m));
  EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-13);

  // and through the sector code
  const auto w = random_wavefunction(m, {{2, 2}, {1, 2}}, 4);
  EXPECT_LT(max_diff(to_dense(fqe::apply(Hamiltonian{ham}, w)), CVector(ref * to_dense(w))), 1e-12);
}

TEST(HamiltonianFile, Detection) {
  const auto dir = tmp_dir("operators");
  write_file(dir / "h.fcidump", "&FCI NORB=1,NELEC=1,MS2=1 &END\n 0.5 1 1 0 0\n");
  write_file(dir / "FCIDUMP_h2", "&FCI NORB=1,NELEC=1,MS2=1 &END\n");
  write_file(dir / "plain.txt", "\n# comment\n  &fci NORB=1,NELEC=1,MS2=1 &END\n");
  write_file(dir / "w.txt", "# W\nDIAGONAL_COULOMB 1\n0.5\n");
  write_file(dir / "a.txt", "QUADRATIC 1\n(0.5+0j)\n");
  write_file(dir / "g.txt", "# generator\n0.5 2^ 0 # hop\n+ 1^ 1\n");
  write_file(dir / "empty.txt", "# nothing\n\n");
  EXPECT_EQ(detect_hamiltonian_file((dir / "h.fcidump").string()), HamiltonianFile::fcidump);
  EXPECT_EQ(detect_hamiltonian_file((dir / "FCIDUMP_h2").string()), HamiltonianFile::fcidump);
  EXPECT_EQ(detect_hamiltonian_file((dir / "plain.txt").string()), HamiltonianFile::fcidump);
  EXPECT_EQ(detect_hamiltonian_file((dir / "w.txt").string()), HamiltonianFile::diagonal_coulomb);
  EXPECT_EQ(detect_hamiltonian_file((dir / "a.txt").string()), HamiltonianFile::quadratic);
  EXPECT_EQ(detect_hamiltonian_file((dir / "g.txt").string()), HamiltonianFile::operator_text);
  EXPECT_THROW(detect_hamiltonian_file((dir / "empty.txt").string()), FormatError);
  EXPECT_THROW(detect_hamiltonian_file((dir / "nope.txt").string()), FormatError);

  EXPECT_EQ(classify(load_hamiltonian((dir / "w.txt").string())), HamiltonianKind::diagonal_coulomb);
  EXPECT_EQ(classify(load_hamiltonian((dir / "a.txt").string())), HamiltonianKind::quadratic);
  EXPECT_EQ(classify(load_hamiltonian((dir / "h.fcidump").string())), HamiltonianKind::restricted_dense);
  const auto g = std::get<SparseHamiltonian>(load_hamiltonian((dir / "g.txt").string()));
  EXPECT_EQ(g.generator, parse_operator_string("0.5 2^ 0 + 1^ 1"));
  EXPECT_THROW(load_hamiltonian((dir / "w.txt").string(), HamiltonianFile::quadratic), FormatError);
  EXPECT_EQ(parse_hamiltonian_file_kind("diagonal"), HamiltonianFile::diagonal_coulomb);
  EXPECT_FALSE(parse_hamiltonian_file_kind("dense").has_value());
}

TEST(HamiltonianFile, MatrixRoundTrip) {
  const auto dir = tmp_dir("operators");
  Rng rng(6);
  const CMatrix a = random_hermitian(4, rng);
  save_matrix_file((dir / "q.txt").string(), "QUADRATIC", a);
  const auto [tag, b] = load_matrix_file((dir / "q.txt").string());
  EXPECT_EQ(tag, "QUADRATIC");
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);

  write_file(dir / "bad1.txt", "QUADRATIC 2\n1 2 3\n");
  write_file(dir / "bad2.txt", "QUADRATIC x\n");
  write_file(dir / "bad3.txt", "QUADRATIC 1\n(1+j\n");
  for (const char* f : {"bad1.txt", "bad2.txt", "bad3.txt"})
    EXPECT_THROW(load_matrix_file((dir / f).string()), FormatError) << f;
}
