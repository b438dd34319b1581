#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "fqe/bitstring.hpp"
#include "fqe/error.hpp"

namespace fqe {

enum class Spin : int { alpha = 0, beta = 1 };

inline const char* to_string(Spin s) { return s == Spin::alpha ? "alpha" : "beta"; }

/// Sector label (n electrons, sz = n_alpha - n_beta). The orbital count lives on the
/// owning wavefunction or graph set.
struct SectorKey {
  int n = 0;
  int sz = 0;

  int n_alpha() const { return (n + sz) / 2; }
  int n_beta() const { return (n - sz) / 2; }

  static SectorKey from_counts(int n_alpha, int n_beta) {
    return {n_alpha + n_beta, n_alpha - n_beta};
  }

  auto operator<=>(const SectorKey&) const = default;
};

inline std::string to_string(const SectorKey& k) {
  return "(n=" + std::to_string(k.n) + ", sz=" + std::to_string(k.sz) + ")";
}

/// The (n, sz, m) triple used to declare sectors.
struct SectorTriple {
  int n = 0;
  int sz = 0;
  int m = 0;

  SectorKey key() const { return {n, sz}; }
};

inline void validate_sector(const SectorKey& k, int m) {
  const auto where = to_string(k) + " with m=" + std::to_string(m);
  if (m < 0 || m > kMaxOrbitals) throw DomainError("invalid orbital count in sector " + where);
  if (k.n < 0 || k.n > 2 * m) throw DomainError("electron count out of range in sector " + where);
  if (k.sz > k.n || -k.sz > k.n) throw DomainError("|sz| exceeds n in sector " + where);
  if ((k.n + k.sz) % 2 != 0) throw DomainError("n + sz is odd in sector " + where);
  if (k.n_alpha() > m || k.n_beta() > m)
    throw DomainError("spin channel overfilled in sector " + where);
}

/// ⟨target| a†_create a_annihilate |source⟩ = parity within one spin channel.
struct Excitation {
  std::uint32_t target;
  std::uint8_t create;
  std::uint8_t annihilate;
  std::int8_t parity;
};

struct StringLink {
  std::uint32_t source;
  std::uint32_t target;
  std::int8_t parity;

  bool operator==(const StringLink&) const = default;
};

/// A single creation or annihilation taking a string into the n±1 space.
struct LadderLink {
  std::uint32_t target;
  std::uint8_t orbital;
  std::int8_t parity;
};

/// All strings of one spin channel with fixed (m, n), with precomputed single
/// excitations inside the space and ladder links to the n±1 spaces.
class StringSpace {
 public:
  StringSpace(int m, int n) : m_(m), n_(n), strings_(enumerate_strings(m, n)) {
    const std::size_t dim = strings_.size();
    exc_offsets_.reserve(dim + 1);
    ann_offsets_.reserve(dim + 1);
    cre_offsets_.reserve(dim + 1);
    by_pair_.resize(static_cast<std::size_t>(m) * m);
    exc_offsets_.push_back(0);
    ann_offsets_.push_back(0);
    cre_offsets_.push_back(0);
    for (std::size_t s = 0; s < dim; ++s) {
      const bits_t b = strings_[s];
      for (int j = 0; j < m; ++j) {
        if (!occupied(b, j)) continue;
        const bits_t removed = b ^ (bits_t{1} << j);
        for (int i = 0; i < m; ++i) {
          if (i != j && occupied(b, i)) continue;
          const bits_t t = removed | (bits_t{1} << i);
          const int par = parity_between(b, i, j);
          const auto target = static_cast<std::uint32_t>(lexical_index(t));
          excitations_.push_back({target, static_cast<std::uint8_t>(i),
                                  static_cast<std::uint8_t>(j), static_cast<std::int8_t>(par)});
          by_pair_[static_cast<std::size_t>(i) * m + j].push_back(
              {static_cast<std::uint32_t>(s), target, static_cast<std::int8_t>(par)});
        }
        annihilations_.push_back({static_cast<std::uint32_t>(lexical_index(removed)),
                                  static_cast<std::uint8_t>(j),
                                  static_cast<std::int8_t>(parity_below(b, j))});
      }
      for (int k = 0; k < m; ++k) {
        if (occupied(b, k)) continue;
        creations_.push_back({static_cast<std::uint32_t>(lexical_index(b | (bits_t{1} << k))),
                              static_cast<std::uint8_t>(k),
                              static_cast<std::int8_t>(parity_below(b, k))});
      }
      exc_offsets_.push_back(excitations_.size());
      ann_offsets_.push_back(annihilations_.size());
      cre_offsets_.push_back(creations_.size());
    }
  }

  int norb() const { return m_; }
  int nelec() const { return n_; }
  std::size_t size() const { return strings_.size(); }
  bits_t string(std::size_t idx) const { return strings_[idx]; }
  const std::vector<bits_t>& strings() const { return strings_; }
  std::size_t index(bits_t b) const { return static_cast<std::size_t>(lexical_index(b)); }

  /// Every a†_i a_j with j occupied and (i == j or i empty), from string idx.
  std::span<const Excitation> excitations(std::size_t idx) const {
    return {excitations_.data() + exc_offsets_[idx], exc_offsets_[idx + 1] - exc_offsets_[idx]};
  }
  /// a_j for each occupied j; targets index the (n-1) space.
  std::span<const LadderLink> annihilations(std::size_t idx) const {
    return {annihilations_.data() + ann_offsets_[idx], ann_offsets_[idx + 1] - ann_offsets_[idx]};
  }
  /// a†_k for each empty k; targets index the (n+1) space.
  std::span<const LadderLink> creations(std::size_t idx) const {
    return {creations_.data() + cre_offsets_[idx], cre_offsets_[idx + 1] - cre_offsets_[idx]};
  }
  /// Entries (source, target, parity) of a†_i a_j over the whole space.
  const std::vector<StringLink>& excitation_map(int i, int j) const {
    return by_pair_[static_cast<std::size_t>(i) * m_ + j];
  }

 private:
  int m_;
  int n_;
  std::vector<bits_t> strings_;
  std::vector<Excitation> excitations_;
  std::vector<std::size_t> exc_offsets_;
  std::vector<LadderLink> annihilations_;
  std::vector<std::size_t> ann_offsets_;
  std::vector<LadderLink> creations_;
  std::vector<std::size_t> cre_offsets_;
  std::vector<std::vector<StringLink>> by_pair_;
};

/// Shared, immutable string spaces keyed by (m, n).
inline std::shared_ptr<const StringSpace> string_space(int m, int n) {
  if (n < 0 || n > m || m > kMaxOrbitals)
    throw DomainError("string_space: invalid (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                      ")");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const StringSpace>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{m, n}];
  if (!slot) slot = std::make_shared<const StringSpace>(m, n);
  return slot;
}

/// String graph of one (n_alpha, n_beta, m) sector.
class FciGraph {
 public:
  FciGraph(int n_alpha, int n_beta, int m)
      : n_alpha_(n_alpha),
        n_beta_(n_beta),
        m_(m),
        alpha_(string_space(m, n_alpha)),
        beta_(string_space(m, n_beta)) {}

  int n_alpha() const { return n_alpha_; }
  int n_beta() const { return n_beta_; }
  int norb() const { return m_; }
  std::size_t dim_alpha() const { return alpha_->size(); }
  std::size_t dim_beta() const { return beta_->size(); }

  const StringSpace& alpha() const { return *alpha_; }
  const StringSpace& beta() const { return *beta_; }
  const StringSpace& channel(Spin s) const { return s == Spin::alpha ? *alpha_ : *beta_; }

  std::size_t index_alpha(bits_t b) const { return alpha_->index(b); }
  std::size_t index_beta(bits_t b) const { return beta_->index(b); }

  /// Entries of ⟨I'σ| a†_iσ a_jσ |Iσ⟩ within channel σ.
  const std::vector<StringLink>& excitation_map(int i, int j, Spin s) const {
    return channel(s).excitation_map(i, j);
  }

 private:
  int n_alpha_;
  int n_beta_;
  int m_;
  std::shared_ptr<const StringSpace> alpha_;
  std::shared_ptr<const StringSpace> beta_;
};

inline std::shared_ptr<const FciGraph> build_fci_graph(int n_alpha, int n_beta, int m) {
  if (m < 0 || m > kMaxOrbitals || n_alpha < 0 || n_beta < 0 || n_alpha > m || n_beta > m)
    throw DomainError("build_fci_graph: invalid (n_alpha=" + std::to_string(n_alpha) +
                      ", n_beta=" + std::to_string(n_beta) + ", m=" + std::to_string(m) + ")");
  return std::make_shared<const FciGraph>(n_alpha, n_beta, m);
}

enum class LadderKind : int { create = 0, annihilate = 1 };

struct LinkKey {
  SectorKey from;
  SectorKey to;
  int orbital;
  Spin spin;
  LadderKind kind;

  auto operator<=>(const LinkKey&) const = default;
};

/// Graphs for a set of sectors plus single creation/annihilation maps between
/// every present pair of sectors that differ by one electron in one channel.
/// Parities follow the global ordering (alpha block before beta block), so a
/// beta operator carries the extra factor (-1)^n_alpha.
struct FciGraphSet {
  int m = 0;
  std::map<SectorKey, std::shared_ptr<const FciGraph>> graphs;
  std::map<LinkKey, std::vector<StringLink>> link_maps;

  const std::vector<StringLink>* find(const LinkKey& key) const {
    auto it = link_maps.find(key);
    return it == link_maps.end() ? nullptr : &it->second;
  }
};

inline FciGraphSet build_fci_graph_set(std::span<const SectorTriple> sectors) {
  FciGraphSet set;
  if (sectors.empty()) return set;
  set.m = sectors.front().m;
  for (const auto& t : sectors) {
    if (t.m != set.m)
      throw DomainError("build_fci_graph_set: mixed orbital counts " + std::to_string(set.m) +
                        " and " + std::to_string(t.m));
    validate_sector(t.key(), t.m);
    set.graphs[t.key()] = build_fci_graph(t.key().n_alpha(), t.key().n_beta(), t.m);
  }
  const int m = set.m;
  for (const auto& [from, graph] : set.graphs) {
    for (Spin spin : {Spin::alpha, Spin::beta}) {
      const int na = from.n_alpha();
      const int nb = from.n_beta();
      const StringSpace& space = graph->channel(spin);
      const int extra = (spin == Spin::beta && (na & 1)) ? -1 : 1;
      // creation
      {
        const SectorKey to = spin == Spin::alpha ? SectorKey::from_counts(na + 1, nb)
                                                 : SectorKey::from_counts(na, nb + 1);
        if (set.graphs.count(to)) {
          for (int k = 0; k < m; ++k) set.link_maps[{from, to, k, spin, LadderKind::create}];
          for (std::size_t s = 0; s < space.size(); ++s)
            for (const auto& l : space.creations(s))
              set.link_maps[{from, to, l.orbital, spin, LadderKind::create}].push_back(
                  {static_cast<std::uint32_t>(s), l.target,
                   static_cast<std::int8_t>(l.parity * extra)});
        }
      }
      // annihilation
      {
        const SectorKey to = spin == Spin::alpha ? SectorKey::from_counts(na - 1, nb)
                                                 : SectorKey::from_counts(na, nb - 1);
        if (set.graphs.count(to)) {
          for (int k = 0; k < m; ++k) set.link_maps[{from, to, k, spin, LadderKind::annihilate}];
          for (std::size_t s = 0; s < space.size(); ++s)
            for (const auto& l : space.annihilations(s))
              set.link_maps[{from, to, l.orbital, spin, LadderKind::annihilate}].push_back(
                  {static_cast<std::uint32_t>(s), l.target,
                   static_cast<std::int8_t>(l.parity * extra)});
        }
      }
    }
  }
  return set;
}

}  // namespace fqe
