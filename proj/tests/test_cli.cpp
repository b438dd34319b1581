#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "cli_run.hpp"
#include "test_support.hpp"

using namespace fqe;
using fqe::testing::max_diff;
using fqe::testing::run_cli;
using fqe::testing::tmp_dir;
using nlohmann::json;

namespace {

std::string path_in(const std::string& name) { return (tmp_dir("cli") / name).string(); }

json run_json(const std::vector<std::string>& args) {
  const auto r = run_cli(args);
  EXPECT_EQ(r.code, 0) << r.out;
  return r.code == 0 ? json::parse(r.out) : json{};
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_w_matrix(const std::string& p, int m, std::uint64_t seed) {
  Rng rng(seed);
  save_matrix_file(p, "DIAGONAL_COULOMB", random_hermitian(m, rng));
}

}  // namespace

TEST(Cli, InitAndPrint) {
  const auto f = path_in("hf.fqew");
  const auto j = run_json({"init", "--m", "3", "--sector", "2,0", "--hf", "--out", f});
  EXPECT_EQ(j["m"], 3);
  EXPECT_EQ(j["elements"], 9);
  EXPECT_DOUBLE_EQ(j["norm"].get<double>(), 1.0);
  const auto p = run_cli({"print", "--wfn", f});
  ASSERT_EQ(p.code, 0);
  EXPECT_EQ(p.out, "Sector N = 2 : S_z = 0\na'001'b'001' (1+0j)\n");

  // printed text parses back to the same file
  std::ofstream(path_in("hf.txt")) << p.out;
  run_json({"init", "--text", path_in("hf.txt"), "--out", path_in("hf2.fqew")});
  EXPECT_EQ(read_file(f), read_file(path_in("hf2.fqew")));

  const auto r = run_json({"init", "--m", "4", "--sector", "2,0", "--sector", "3,1", "--seed", "5", "--out",
                           path_in("r.fqew")});
  EXPECT_EQ(r["sectors"], 2);
  EXPECT_EQ(r["elements"], 16 + 24);
  EXPECT_EQ(max_diff(load(path_in("r.fqew")), initialize(create_wavefunction({{2, 0, 4}, {3, 1, 4}}), RandomInit{5})),
            0.0);
}

TEST(Cli, EvolveMethods) {
  const auto wf = path_in("ev.fqew");
  const auto wm = path_in("w.txt");
  run_json({"init", "--m", "3", "--sector", "2,0", "--sector", "1,1", "--seed", "3", "--out", wf});
  write_w_matrix(wm, 3, 4);

  const auto a = run_json({"evolve", "--wfn", wf, "--ham", wm, "--time", "0.7", "--out", path_in("ev_auto.fqew")});
  EXPECT_EQ(a["method_used"], "diagonal_coulomb");
  EXPECT_LT(a["norm_drift"].get<double>(), 1e-13);
  const auto w = load(wf);
  const auto oracle_out = oracle::oracle_evolve(0.7, oracle::jw_matrix(load_hamiltonian(wm), 3), to_dense(w));
  EXPECT_LT(max_diff(to_dense(load(path_in("ev_auto.fqew"))), oracle_out), 1e-12);

  // t = 0 leaves the file bit-identical
  run_json({"evolve", "--wfn", wf, "--ham", wm, "--time", "0", "--out", path_in("ev0.fqew")});
  EXPECT_EQ(read_file(wf), read_file(path_in("ev0.fqew")));

  const auto t = run_json({"evolve", "--wfn", wf, "--ham", wm, "--time", "0.3", "--method", "taylor", "--out",
                           path_in("ev_t.fqew")});
  const auto c = run_json({"evolve", "--wfn", wf, "--ham", wm, "--time", "0.3", "--method", "chebyshev", "--out",
                           path_in("ev_c.fqew")});
  EXPECT_EQ(t["method_used"], "taylor");
  EXPECT_EQ(c["method_used"], "chebyshev");
  EXPECT_GT(t["terms_used"].get<int>(), 0);
  EXPECT_LT(max_diff(load(path_in("ev_t.fqew")), load(path_in("ev_c.fqew"))), 1e-10);

  // single excitation generator from an operator file
  std::ofstream(path_in("g.txt")) << "(0.3+0.4j) 2^ 0\n";
  const auto e = run_json({"evolve", "--wfn", wf, "--ham", path_in("g.txt"), "--time", "1.1", "--method",
                           "excitation", "--out", path_in("ev_e.fqew")});
  EXPECT_EQ(e["method_used"], "excitation");
  const auto gop = oracle::jw_matrix(load_hamiltonian(path_in("g.txt")), 3);
  EXPECT_LT(max_diff(to_dense(load(path_in("ev_e.fqew"))), oracle::oracle_evolve(1.1, gop, to_dense(w))), 1e-12);
}

TEST(Cli, RdmAndExpect) {
  const auto wf = path_in("rdm.fqew");
  run_json({"init", "--m", "3", "--sector", "3,1", "--seed", "2", "--out", wf});
  const auto r1 = run_json({"rdm", "--wfn", wf, "--order", "1", "--out", path_in("d1.fqet")});
  EXPECT_NEAR(r1["trace"]["re"].get<double>(), 3.0, 1e-12);
  EXPECT_NEAR(r1["trace"]["im"].get<double>(), 0.0, 1e-12);
  EXPECT_LT(r1["hermiticity_residual"].get<double>(), 1e-13);
  EXPECT_EQ(r1["dims"], json::array({3, 3}));
  const Tensor d1 = load_tensor(path_in("d1.fqet"));
  EXPECT_LT(max_diff(d1, oracle::oracle_rdm_spin_summed(to_dense(load(wf)), 3, 1)), 1e-13);

  const auto r2 = run_json({"rdm", "--wfn", wf, "--order", "2", "--flavor", "spin-orbital", "--out",
                            path_in("d2.fqet")});
  EXPECT_NEAR(r2["trace"]["re"].get<double>(), 6.0, 1e-12);
  EXPECT_EQ(r2["dims"], json::array({6, 6, 6, 6}));

  const auto h1 = run_json({"rdm", "--wfn", wf, "--order", "1", "--kind", "hole", "--out", path_in("h1.fqet")});
  EXPECT_EQ(h1["kind"], "hole");
  EXPECT_NE(run_cli({"rdm", "--wfn", wf, "--order", "3", "--kind", "hole", "--out", path_in("h3.fqet")}).code, 0);
  EXPECT_EQ(run_cli({"rdm", "--wfn", wf, "--order", "1", "--flavor", "mixed", "--out", path_in("x.fqet")}).code, 2);

  const auto n = run_json({"expect", "--wfn", wf, "--op", "0^ 0 + 2^ 2 + 4^ 4 + 1^ 1 + 3^ 3 + 5^ 5"});
  EXPECT_NEAR(n["value"]["re"].get<double>(), 3.0, 1e-12);
  EXPECT_EQ(run_cli({"expect", "--wfn", wf}).code, 2);
}

TEST(Cli, VerifyAndBench) {
  const auto v = run_cli({"verify", "--m", "2", "--seed", "4"});
  EXPECT_EQ(v.code, 0);
  const auto j = json::parse(v.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_GT(j["checks"].size(), 20u);
  EXPECT_EQ(run_cli({"verify", "--m", "8"}).code, 2);

  const auto csv = path_in("bench.csv");
  const auto b = run_json({"bench", "--kind", "diagonal", "--orbitals", "4..6", "--filling", "both", "--repeats", "2",
                           "--min-batch", "1e-4", "--csv", csv});
  EXPECT_EQ(b["rows"], 3 * 2 * 2);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kBenchCsvHeader);
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 12);
  EXPECT_EQ(run_cli({"bench", "--orbitals", "9..4", "--csv", csv}).code, 2);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"evolve", "--wfn", "x"}).code, 2);

  // unreadable or corrupt inputs are format errors
  EXPECT_EQ(run_cli({"print", "--wfn", path_in("does_not_exist.fqew")}).code, 3);
  std::ofstream(path_in("junk.fqew")) << "not a wavefunction";
  EXPECT_EQ(run_cli({"print", "--wfn", path_in("junk.fqew")}).code, 3);
  std::ofstream(path_in("bad_op.txt")) << "2^ x\n";
  const auto wf = path_in("codes.fqew");
  run_json({"init", "--m", "2", "--sector", "2,0", "--seed", "1", "--out", wf});
  EXPECT_EQ(run_cli({"evolve", "--wfn", wf, "--ham", path_in("bad_op.txt"), "--time", "1", "--out", path_in("o.fqew")})
                .code,
            3);

  // series that cannot reach the threshold within the term cap
  std::ofstream(path_in("hop.txt")) << "2.0 2^ 0 + 1.5 3^ 1\n";
  EXPECT_EQ(run_cli({"evolve", "--wfn", wf, "--ham", path_in("hop.txt"), "--time", "3", "--method", "taylor",
                     "--max-terms", "2", "--out", path_in("o.fqew")})
                .code,
            4);

  // domain errors: Hamiltonian larger than the wavefunction
  write_w_matrix(path_in("w5.txt"), 5, 1);
  EXPECT_EQ(run_cli({"evolve", "--wfn", wf, "--ham", path_in("w5.txt"), "--time", "1", "--out", path_in("o.fqew")})
                .code,
            2);
}

TEST(Cli, SeededOutputsAreReproducible) {
  for (int rep = 0; rep < 2; ++rep)
    run_json({"init", "--m", "4", "--sector", "4,0", "--seed", "9", "--out", path_in("rep" + std::to_string(rep) + ".fqew")});
  EXPECT_EQ(read_file(path_in("rep0.fqew")), read_file(path_in("rep1.fqew")));
}
