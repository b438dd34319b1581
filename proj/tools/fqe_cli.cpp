// Command-line front end. Summaries go to stdout as JSON, data to files.
// Exit codes: 0 ok, 1 verification failure, 2 usage or invalid request, 3 file format, 4 convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fqe/fqe.hpp"

using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kFormat = 3, kConvergence = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json complex_json(fqe::cd z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::pair<int, int> parse_range(const std::string& s) {
  try {
    const auto dots = s.find("..");
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {v, v};
    }
    const std::string lo = s.substr(0, dots), hi = s.substr(dots + 2);
    const int a = std::stoi(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(s);
    const int b = std::stoi(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::exception&) {
    throw UsageError("bad orbital range '" + s + "' (expected e.g. 4..12)");
  }
}

/// "n,sz" pairs, e.g. "4,0".
fqe::SectorTriple parse_sector(const std::string& s, int m) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1)), m};
  } catch (const std::exception&) {
    throw UsageError("bad sector '" + s + "' (expected n,sz)");
  }
}

// --- evolve ---------------------------------------------------------------

struct EvolveArgs {
  std::string wfn, ham, out, method = "auto", ham_kind;
  double time = 0.0;
  double thresh = 1.0e-14;
  int max_terms = 64;
  std::optional<double> e_min, e_max;
};

int cmd_evolve(const EvolveArgs& a) {
  using namespace fqe;
  const Wavefunction w = load(a.wfn);
  std::optional<HamiltonianFile> kind;
  if (!a.ham_kind.empty()) kind = parse_hamiltonian_file_kind(a.ham_kind);
  const Hamiltonian h = load_hamiltonian(a.ham, kind);

  EvolveOptions opts;
  opts.control.threshold = a.thresh;
  opts.control.max_terms = a.max_terms;
  if (a.e_min || a.e_max) {
    if (!a.e_min || !a.e_max) throw UsageError("--e-min and --e-max must be given together");
    opts.window = SpectralWindow{*a.e_min, *a.e_max, 0.9875};
  }
  if (required_orbitals(h) > w.norb())
    throw DomainError("Hamiltonian needs " + std::to_string(required_orbitals(h)) +
                      " orbitals but the wavefunction has m=" + std::to_string(w.norb()));

  EvolveResult res;
  if (a.method == "auto") {
    res = time_evolve(a.time, h, w, opts);
  } else if (a.method == "taylor" || a.method == "chebyshev") {
    opts.method = a.method == "taylor" ? SeriesMethod::taylor : SeriesMethod::chebyshev;
    res = time_evolve(a.time, h, w, opts);
  } else if (a.method == "diagonal") {
    const auto* d = std::get_if<DiagonalCoulomb>(&h);
    if (!d) throw DomainError("--method diagonal needs a diagonal Coulomb Hamiltonian");
    res = {evolve_diagonal_coulomb(a.time, *d, w), "diagonal_coulomb", 0};
  } else if (a.method == "quadratic") {
    const auto* q = std::get_if<QuadraticHamiltonian>(&h);
    if (!q) throw DomainError("--method quadratic needs a quadratic Hamiltonian");
    res = {evolve_quadratic(a.time, *q, w), "quadratic", 0};
  } else if (a.method == "excitation") {
    const auto* s = std::get_if<SparseHamiltonian>(&h);
    if (!s || s->generator.terms.size() != 1)
      throw DomainError("--method excitation needs an operator file with exactly one term");
    res = {evolve_excitation(a.time, s->generator.terms[0], w), "excitation", 0};
  } else {
    throw UsageError("unknown method '" + a.method + "'");
  }
  save(res.wfn, a.out);
  json j{{"method_used", res.method_used},
         {"terms_used", res.terms_used},
         {"norm_drift", std::abs(res.wfn.norm() - w.norm())},
         {"out", a.out}};
  std::cout << j.dump() << "\n";
  return kOk;
}

// --- rdm ------------------------------------------------------------------

struct RdmArgs {
  std::string wfn, out, flavor = "spin-summed", kind = "particle";
  int order = 1;
};

int cmd_rdm(const RdmArgs& a) {
  using namespace fqe;
  const Wavefunction w = load(a.wfn);
  RdmFlavor flavor;
  if (a.flavor == "spin-summed") flavor = RdmFlavor::spin_summed;
  else if (a.flavor == "spin-orbital") flavor = RdmFlavor::spin_orbital;
  else throw UsageError("unknown flavor '" + a.flavor + "'");
  RdmTensor r;
  if (a.kind == "particle") r = compute_rdm(w, a.order, flavor);
  else if (a.kind == "hole") r = hole_rdm(w, a.order, flavor);
  else throw UsageError("unknown kind '" + a.kind + "'");
  save_tensor(r.data, a.out);
  json j{{"order", a.order},
         {"flavor", a.flavor},
         {"kind", a.kind},
         {"dims", r.data.dims},
         {"trace", complex_json(rdm_trace(r))},
         {"hermiticity_residual", rdm_hermiticity_residual(r)},
         {"out", a.out}};
  std::cout << j.dump() << "\n";
  return kOk;
}

// --- expect ---------------------------------------------------------------

struct ExpectArgs {
  std::string wfn, ham, op, ham_kind;
};

int cmd_expect(const ExpectArgs& a) {
  using namespace fqe;
  const Wavefunction w = load(a.wfn);
  if (a.ham.empty() == a.op.empty()) throw UsageError("give exactly one of --ham or --op");
  cd value;
  if (!a.op.empty()) {
    value = expectation(w, parse_operator_string(a.op));
  } else {
    std::optional<HamiltonianFile> kind;
    if (!a.ham_kind.empty()) kind = parse_hamiltonian_file_kind(a.ham_kind);
    value = expectation(w, load_hamiltonian(a.ham, kind));
  }
  std::cout << json{{"value", complex_json(value)}}.dump() << "\n";
  return kOk;
}

// --- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string kind = "diagonal", orbitals = "4..12", filling = "half", csv;
  int threads = 0;
  int repeats = 3;
  std::uint64_t seed = 7;
  double min_batch = 2.0e-3;
};

int cmd_bench(const BenchArgs& a) {
  using namespace fqe;
  BenchConfig cfg;
  if (a.kind == "diagonal") cfg.kind = BenchKind::diagonal;
  else if (a.kind == "quadratic") cfg.kind = BenchKind::quadratic;
  else if (a.kind == "apply-dense") cfg.kind = BenchKind::apply_dense;
  else throw UsageError("unknown bench kind '" + a.kind + "'");
  if (a.filling == "half") cfg.fillings = {Filling::half};
  else if (a.filling == "quarter") cfg.fillings = {Filling::quarter};
  else if (a.filling == "both") cfg.fillings = {Filling::half, Filling::quarter};
  else throw UsageError("unknown filling '" + a.filling + "'");
  std::tie(cfg.m_min, cfg.m_max) = parse_range(a.orbitals);
  cfg.threads = a.threads;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.min_batch_seconds = a.min_batch;
  const auto rows = run_bench(cfg);

  std::ofstream out(a.csv);
  if (!out) throw FormatError("cannot open '" + a.csv + "' for writing");
  write_bench_csv(out, rows);
  out.close();

  std::vector<double> secs, cost;
  for (const auto& r : rows) {
    secs.push_back(r.seconds);
    cost.push_back(static_cast<double>(r.sector_dim) * r.m * r.m);
  }
  json j{{"rows", rows.size()}, {"csv", a.csv}};
  if (rows.size() >= 2) j["spearman_seconds_vs_dim_m2"] = spearman(secs, cost);
  std::cout << j.dump() << "\n";
  return kOk;
}

// --- verify ---------------------------------------------------------------

int cmd_verify(int m, std::uint64_t seed) {
  const auto rep = fqe::run_verification(m, seed);
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}, {"tolerance", c.tolerance}});
  json j{{"m", m}, {"seed", seed}, {"passed", rep.passed()}, {"checks", checks}};
  std::cout << j.dump(2) << "\n";
  return rep.passed() ? kOk : kVerifyFailed;
}

// --- init / print ---------------------------------------------------------

struct InitArgs {
  int m = 0;
  std::vector<std::string> sectors;
  std::optional<std::uint64_t> seed;
  bool hf = false;
  std::string text, out;
};

int cmd_init(const InitArgs& a) {
  using namespace fqe;
  Wavefunction w;
  if (!a.text.empty()) {
    if (!a.sectors.empty() || a.seed || a.hf) throw UsageError("--text cannot be combined with --sector/--seed/--hf");
    std::ifstream in(a.text);
    if (!in) throw FormatError("cannot open '" + a.text + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    w = parse_wfn_text(ss.str());
  } else {
    if (a.m < 1) throw UsageError("--m is required");
    if (a.sectors.empty()) throw UsageError("at least one --sector is required");
    if (a.hf == a.seed.has_value()) throw UsageError("give exactly one of --seed or --hf");
    std::vector<SectorTriple> t;
    for (const auto& s : a.sectors) t.push_back(parse_sector(s, a.m));
    const Wavefunction empty = create_wavefunction(t);
    w = a.hf ? initialize(empty, HartreeFockInit{}) : initialize(empty, RandomInit{*a.seed});
  }
  save(w, a.out);
  json j{{"m", w.norb()}, {"sectors", w.sectors().size()}, {"elements", w.size()}, {"norm", w.norm()}, {"out", a.out}};
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_print(const std::string& path, double threshold) {
  std::cout << fqe::print_wfn(fqe::load(path), threshold);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermionic statevector emulator"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads for apply/evolve kernels (0 = all cores)")
      ->check(CLI::NonNegativeNumber);

  EvolveArgs ev;
  auto* evolve = app.add_subcommand("evolve", "time-evolve a wavefunction file");
  evolve->add_option("--wfn", ev.wfn, "input wavefunction (.fqew)")->required();
  evolve->add_option("--ham", ev.ham, "Hamiltonian: FCIDUMP, operator text or W/A matrix file")->required();
  evolve->add_option("--ham-kind", ev.ham_kind, "override detection")
      ->check(CLI::IsMember({"fcidump", "operator", "diagonal", "quadratic"}));
  evolve->add_option("--time", ev.time, "evolution time")->required();
  evolve->add_option("--method", ev.method)
      ->check(CLI::IsMember({"auto", "excitation", "taylor", "chebyshev", "diagonal", "quadratic"}));
  evolve->add_option("--thresh", ev.thresh, "series truncation threshold");
  evolve->add_option("--max-terms", ev.max_terms, "series term cap")->check(CLI::PositiveNumber);
  evolve->add_option("--e-min", ev.e_min, "Chebyshev window lower bound");
  evolve->add_option("--e-max", ev.e_max, "Chebyshev window upper bound");
  evolve->add_option("--out", ev.out, "output wavefunction")->required();

  RdmArgs rd;
  auto* rdm = app.add_subcommand("rdm", "reduced density matrix to a tensor file");
  rdm->add_option("--wfn", rd.wfn)->required();
  rdm->add_option("--order", rd.order)->required();
  rdm->add_option("--flavor", rd.flavor)->check(CLI::IsMember({"spin-summed", "spin-orbital"}));
  rdm->add_option("--kind", rd.kind)->check(CLI::IsMember({"particle", "hole"}));
  rdm->add_option("--out", rd.out)->required();

  ExpectArgs ex;
  auto* expect = app.add_subcommand("expect", "expectation value of an operator or Hamiltonian");
  expect->add_option("--wfn", ex.wfn)->required();
  expect->add_option("--ham", ex.ham, "Hamiltonian file");
  expect->add_option("--ham-kind", ex.ham_kind)
      ->check(CLI::IsMember({"fcidump", "operator", "diagonal", "quadratic"}));
  expect->add_option("--op", ex.op, "operator text, e.g. \"0.5 2^ 0\"");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "scaling benchmark, CSV output");
  bench->add_option("--kind", bn.kind)->check(CLI::IsMember({"diagonal", "quadratic", "apply-dense"}));
  bench->add_option("--orbitals", bn.orbitals, "orbital range, e.g. 4..12");
  bench->add_option("--filling", bn.filling)->check(CLI::IsMember({"half", "quarter", "both"}));
  bench->add_option("--threads", bn.threads)->check(CLI::NonNegativeNumber);
  bench->add_option("--repeats", bn.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--seed", bn.seed);
  bench->add_option("--min-batch", bn.min_batch, "minimum seconds per timed batch");
  bench->add_option("--csv", bn.csv)->required();

  int vm = 4;
  std::uint64_t vseed = 1;
  auto* verify = app.add_subcommand("verify", "oracle-equivalence suite");
  verify->add_option("--m", vm, "orbitals (at most 4)");
  verify->add_option("--seed", vseed);

  InitArgs in;
  auto* init = app.add_subcommand("init", "create a wavefunction file");
  init->add_option("--m", in.m, "orbitals");
  init->add_option("--sector", in.sectors, "sector as n,sz (repeatable)");
  init->add_option("--seed", in.seed, "random initialization seed");
  init->add_flag("--hf", in.hf, "Hartree-Fock determinant");
  init->add_option("--text", in.text, "printed wavefunction to parse");
  init->add_option("--out", in.out)->required();

  std::string print_path;
  double print_thresh = 1.0e-3;
  auto* print = app.add_subcommand("print", "print a wavefunction file");
  print->add_option("--wfn", print_path)->required();
  print->add_option("--threshold", print_thresh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) fqe::set_num_threads(threads);
    if (*evolve) return cmd_evolve(ev);
    if (*rdm) return cmd_rdm(rd);
    if (*expect) return cmd_expect(ex);
    if (*bench) return cmd_bench(bn);
    if (*verify) return cmd_verify(vm, vseed);
    if (*init) return cmd_init(in);
    if (*print) return cmd_print(print_path, print_thresh);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const fqe::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const fqe::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return kConvergence;
  } catch (const fqe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
