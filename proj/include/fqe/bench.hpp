#pragma once

// Scaling sweeps for the structured evolution and dense apply kernels. Timings are taken
// over batches long enough to swamp clock resolution and reported per call.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "fqe/apply.hpp"
#include "fqe/evolve.hpp"
#include "fqe/parallel.hpp"
#include "fqe/random.hpp"

namespace fqe {

enum class BenchKind { diagonal, quadratic, apply_dense };
enum class Filling { half, quarter };

inline const char* to_string(BenchKind k) {
  switch (k) {
    case BenchKind::diagonal: return "diagonal";
    case BenchKind::quadratic: return "quadratic";
    case BenchKind::apply_dense: return "apply-dense";
  }
  return "unknown";
}

inline const char* to_string(Filling f) { return f == Filling::half ? "half" : "quarter"; }

/// Electrons per spin channel: ⌊m/2⌋ at half filling, max(1, ⌊m/4⌋) at quarter filling.
inline int electrons_per_spin(int m, Filling f) { return f == Filling::half ? m / 2 : std::max(1, m / 4); }

struct BenchConfig {
  BenchKind kind = BenchKind::diagonal;
  int m_min = 4;
  int m_max = 12;
  std::vector<Filling> fillings{Filling::half};
  int threads = 0;  // 0 = machine parallelism
  int repeats = 3;
  std::uint64_t seed = 7;
  double min_batch_seconds = 2.0e-3;
};

struct BenchRow {
  std::string kind;
  int m = 0;
  int n_alpha = 0;
  int n_beta = 0;
  int threads = 0;
  int repeat = 0;
  double seconds = 0.0;
  std::size_t sector_dim = 0;
};

inline constexpr const char* kBenchCsvHeader = "kind,m,n_alpha,n_beta,threads,repeat,seconds,sector_dim";

namespace detail {

template <class F>
double seconds_per_call(F&& f, int batch) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < batch; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / batch;
}

/// Warm-up run that also sizes the batch so one timed batch lasts at least `min_seconds`.
template <class F>
int calibrate_batch(F&& f, double min_seconds) {
  int batch = 1;
  for (;;) {
    const double per = seconds_per_call(f, batch);
    if (per * batch >= min_seconds || batch >= (1 << 24)) return batch;
    const double want = min_seconds / std::max(per, 1.0e-9);
    batch = static_cast<int>(std::min<double>(std::max<double>(2.0 * batch, 1.2 * want), 1 << 24));
  }
}

}  // namespace detail

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  if (cfg.m_min < 1 || cfg.m_max < cfg.m_min || cfg.m_max > kMaxOrbitals)
    throw DomainError("bench: bad orbital range " + std::to_string(cfg.m_min) + ".." + std::to_string(cfg.m_max));
  if (cfg.repeats < 1) throw DomainError("bench: repeats must be positive");
  const int saved = detail::thread_setting().load();
  set_num_threads(cfg.threads);
  const int threads = num_threads();
  std::vector<BenchRow> rows;
  try {
    for (int m = cfg.m_min; m <= cfg.m_max; ++m) {
      Rng rng(cfg.seed + static_cast<std::uint64_t>(m));
      const CMatrix mat = random_hermitian(m, rng);
      const RestrictedHamiltonian rh = cfg.kind == BenchKind::apply_dense ? random_restricted(m, cfg.seed + 1000 + m)
                                                                           : RestrictedHamiltonian{};
      for (Filling f : cfg.fillings) {
        const int ne = electrons_per_spin(m, f);
        const Wavefunction w = initialize(create_wavefunction({SectorTriple{2 * ne, 0, m}}), RandomInit{cfg.seed});
        Wavefunction sink;
        auto call = [&] {
          switch (cfg.kind) {
            case BenchKind::diagonal: sink = evolve_diagonal_coulomb(0.1, DiagonalCoulomb{mat}, w); break;
            case BenchKind::quadratic: sink = evolve_quadratic(0.1, QuadraticHamiltonian{mat}, w); break;
            case BenchKind::apply_dense: sink = apply_dense(rh, w); break;
          }
        };
        const int batch = detail::calibrate_batch(call, cfg.min_batch_seconds);
        for (int r = 0; r < cfg.repeats; ++r)
          rows.push_back({to_string(cfg.kind), m, ne, ne, threads, r, detail::seconds_per_call(call, batch), w.size()});
      }
    }
  } catch (...) {
    set_num_threads(saved);
    throw;
  }
  set_num_threads(saved);
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchCsvHeader << "\n";
  for (const auto& r : rows) {
    char sec[32];
    std::snprintf(sec, sizeof sec, "%.9e", r.seconds);
    out << r.kind << "," << r.m << "," << r.n_alpha << "," << r.n_beta << "," << r.threads << "," << r.repeat << ","
        << sec << "," << r.sector_dim << "\n";
  }
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace fqe
