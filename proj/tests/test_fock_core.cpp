#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace fqe;
using fqe::testing::max_diff;

namespace {

/// Applies a product of single-channel ladder ops (rightmost first) to a bit pattern with the
/// plain ascending-order sign convention. Returns 0 when the result vanishes.
int brute_force(std::vector<std::pair<int, bool>> ops, bits_t& b) {
  int sign = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const auto [p, create] = *it;
    if (occupied(b, p) == create) return 0;
    if (popcount(b & below(p)) & 1) sign = -sign;
    b ^= bits_t{1} << p;
  }
  return sign;
}

/// a†_iσ a_jσ applied through the sector's excitation map.
Wavefunction apply_map(const Wavefunction& w, int i, int j, Spin s) {
  Wavefunction out = w.zeros_like();
  for (const auto& [key, sec] : w.sectors()) {
    auto& dst = out.sector(key).coeff;
    for (const auto& l : sec.graph->excitation_map(i, j, s)) {
      if (s == Spin::alpha)
        dst.row(l.target) += static_cast<double>(l.parity) * sec.coeff.row(l.source);
      else
        dst.col(l.target) += static_cast<double>(l.parity) * sec.coeff.col(l.source);
    }
  }
  return out;
}

/// Single ladder operator through the graph-set link maps (determinant level).
Wavefunction apply_link(const FciGraphSet& set, const Wavefunction& w, int k, Spin s, LadderKind kind) {
  Wavefunction out = w.zeros_like();
  for (const auto& [from, sec] : w.sectors()) {
    for (const auto& [to, g] : set.graphs) {
      const auto* links = set.find({from, to, k, s, kind});
      if (!links) continue;
      auto& dst = out.sector(to).coeff;
      for (const auto& l : *links) {
        if (s == Spin::alpha)
          dst.row(l.target) += static_cast<double>(l.parity) * sec.coeff.row(l.source);
        else
          dst.col(l.target) += static_cast<double>(l.parity) * sec.coeff.col(l.source);
      }
    }
  }
  return out;
}

CVector project(const CVector& v, const Wavefunction& w) {
  CVector out = v;
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    const auto [a, b] = deinterleave(static_cast<std::uint64_t>(x));
    if (!w.has_sector(SectorKey::from_counts(popcount(a), popcount(b)))) out(x) = 0.0;
  }
  return out;
}

}  // namespace

TEST(LexicalIndex, Examples) {
  EXPECT_EQ(lexical_index(SpinString{0b0011, 4, 2}), 0u);
  EXPECT_EQ(lexical_index(SpinString{0b0110, 4, 2}), 2u);
  EXPECT_EQ(lexical_index(SpinString{0b1100, 4, 2}), 5u);
}

TEST(LexicalIndex, InvalidStrings) {
  EXPECT_THROW(lexical_index(SpinString{0b0111, 4, 2}), DomainError);
  EXPECT_THROW(lexical_index(SpinString{0b10001, 4, 2}), DomainError);
  EXPECT_THROW(enumerate_strings(3, 4), DomainError);
}

TEST(LexicalIndex, BijectionOntoAscendingOrder) {
  for (int m = 0; m <= 9; ++m)
    for (int n = 0; n <= m; ++n) {
      const auto s = enumerate_strings(m, n);
      ASSERT_EQ(s.size(), binomial(m, n));
      EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
      for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(lexical_index(SpinString{s[i], m, n}), i);
    }
}

TEST(FciGraph, Dimensions) {
  const auto g = build_fci_graph(2, 1, 4);
  EXPECT_EQ(g->dim_alpha(), 6u);
  EXPECT_EQ(g->dim_beta(), 4u);
  EXPECT_THROW(build_fci_graph(5, 1, 4), DomainError);
}

TEST(FciGraph, SingleExcitationExample) {
  const auto g = build_fci_graph(2, 0, 4);
  const auto& map = g->excitation_map(2, 0, Spin::alpha);
  const auto src = g->index_alpha(0b0011);
  auto it = std::find_if(map.begin(), map.end(), [&](const StringLink& l) { return l.source == src; });
  ASSERT_NE(it, map.end());
  bits_t b = 0b0011;
  const int sign = brute_force({{2, true}, {0, false}}, b);
  EXPECT_EQ(b, 0b0110u);
  EXPECT_EQ(sign, -1);
  EXPECT_EQ(it->target, g->index_alpha(0b0110));
  EXPECT_EQ(it->parity, sign);
}

TEST(FciGraph, NumberOperatorMap) {
  const auto g = build_fci_graph(1, 0, 2);
  const auto& map = g->excitation_map(0, 0, Spin::alpha);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_EQ(map[0], (StringLink{static_cast<std::uint32_t>(g->index_alpha(0b01)),
                                static_cast<std::uint32_t>(g->index_alpha(0b01)), 1}));
  // diagonal maps list every string with the orbital occupied, parity +1
  const auto g2 = build_fci_graph(2, 2, 5);
  for (int i = 0; i < 5; ++i) {
    const auto& d = g2->excitation_map(i, i, Spin::beta);
    std::size_t expected = 0;
    for (bits_t s : g2->beta().strings()) expected += occupied(s, i) ? 1 : 0;
    EXPECT_EQ(d.size(), expected);
    for (const auto& l : d) {
      EXPECT_EQ(l.source, l.target);
      EXPECT_EQ(l.parity, 1);
    }
  }
}

TEST(FciGraph, ExcitationMapsBruteForce) {
  for (int m = 1; m <= 5; ++m)
    for (int n = 0; n <= m; ++n) {
      const auto& space = *string_space(m, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          std::size_t count = 0;
          for (std::size_t s = 0; s < space.size(); ++s) {
            bits_t b = space.string(s);
            const int sign = brute_force({{i, true}, {j, false}}, b);
            if (sign == 0) continue;
            ++count;
            const auto& map = space.excitation_map(i, j);
            auto it = std::find_if(map.begin(), map.end(), [&](const StringLink& l) { return l.source == s; });
            ASSERT_NE(it, map.end());
            EXPECT_EQ(it->target, space.index(b));
            EXPECT_EQ(it->parity, sign);
          }
          EXPECT_EQ(space.excitation_map(i, j).size(), count);
        }
    }
}

TEST(FciGraph, ExcitationMapsMatchOracle) {
  for (int m = 1; m <= 4; ++m) {
    std::vector<SectorTriple> t;
    for (int na = 0; na <= m; ++na)
      for (int nb = 0; nb <= m; ++nb) t.push_back({na + nb, na - nb, m});
    const auto w = initialize(create_wavefunction(t), RandomInit{static_cast<std::uint64_t>(m)});
    const CVector v = to_dense(w);
    for (Spin s : {Spin::alpha, Spin::beta})
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const auto op = oracle::jw_matrix(FermionOperator{{ExcitationTerm{1.0, {cre(i, s), des(j, s)}}}}, m);
          EXPECT_LT(max_diff(to_dense(apply_map(w, i, j, s)), oracle::oracle_apply(op, v)), 1e-14)
              << m << " " << i << " " << j << " " << to_string(s);
        }
  }
}

TEST(FciGraph, ConjugatePairsHaveEqualParity) {
  const auto& space = *string_space(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (const auto& l : space.excitation_map(i, j)) {
        const auto& back = space.excitation_map(j, i);
        auto it = std::find_if(back.begin(), back.end(), [&](const StringLink& r) { return r.source == l.target; });
        ASSERT_NE(it, back.end());
        EXPECT_EQ(it->target, l.source);
        EXPECT_EQ(it->parity * l.parity, 1);
      }
}

TEST(FciGraphSet, LinksMatchOracleLadderOperators) {
  const int m = 3;
  const std::vector<SectorTriple> t{{2, 0, m}, {1, 1, m}, {1, -1, m}, {3, 1, m}, {3, -1, m}, {2, 2, m}};
  const auto set = build_fci_graph_set(t);
  const auto w = initialize(create_wavefunction(t), RandomInit{3});
  const CVector v = to_dense(w);
  for (Spin s : {Spin::alpha, Spin::beta})
    for (int k = 0; k < m; ++k)
      for (LadderKind kind : {LadderKind::create, LadderKind::annihilate}) {
        const auto op = oracle::jw_ladder_matrix(2 * k + static_cast<int>(s), kind == LadderKind::create, m);
        EXPECT_LT(max_diff(to_dense(apply_link(set, w, k, s, kind)), project(oracle::oracle_apply(op, v), w)),
                  1e-14)
            << k << " " << to_string(s);
      }
}

TEST(FciGraphSet, AdjacentSectorCounts) {
  const int m = 2;
  const std::vector<SectorTriple> t{{2, 0, m}, {1, 1, m}};
  const auto set = build_fci_graph_set(t);
  const SectorKey one{1, 1}, two{2, 0};
  for (int k = 0; k < m; ++k) {
    // (1 alpha, 0 beta) -> (1, 1): every beta creation is allowed from the empty beta string
    const auto* cre_b = set.find({one, two, k, Spin::beta, LadderKind::create});
    ASSERT_NE(cre_b, nullptr);
    EXPECT_EQ(cre_b->size(), 1u);
    EXPECT_EQ(set.find({one, two, k, Spin::alpha, LadderKind::create}), nullptr);
    const auto* ann_b = set.find({two, one, k, Spin::beta, LadderKind::annihilate});
    ASSERT_NE(ann_b, nullptr);
    EXPECT_EQ(ann_b->size(), 1u);
  }
  EXPECT_TRUE(build_fci_graph_set(std::vector<SectorTriple>{{2, 0, 4}}).link_maps.empty());
}

TEST(FciGraphSet, AnnihilationIsTransposeOfCreation) {
  const int m = 4;
  const std::vector<SectorTriple> t{{2, 0, m}, {3, 1, m}, {3, -1, m}};
  const auto set = build_fci_graph_set(t);
  for (const auto& [key, links] : set.link_maps) {
    if (key.kind != LadderKind::create) continue;
    const auto* back = set.find({key.to, key.from, key.orbital, key.spin, LadderKind::annihilate});
    ASSERT_NE(back, nullptr);
    ASSERT_EQ(back->size(), links.size());
    for (const auto& l : links) {
      auto it = std::find_if(back->begin(), back->end(), [&](const StringLink& r) { return r.source == l.target; });
      ASSERT_NE(it, back->end());
      EXPECT_EQ(it->target, l.source);
      EXPECT_EQ(it->parity, l.parity);
    }
  }
}

TEST(FciGraphSet, AnnihilateThenCreateIsNumberOperator) {
  const int m = 3;
  const std::vector<SectorTriple> t{{2, 0, m}, {1, 1, m}, {1, -1, m}, {0, 0, m}};
  const auto set = build_fci_graph_set(t);
  const auto w = initialize(create_wavefunction(t), RandomInit{8});
  for (Spin s : {Spin::alpha, Spin::beta})
    for (int k = 0; k < m; ++k) {
      const auto down = apply_link(set, w, k, s, LadderKind::annihilate);
      const auto up = apply_link(set, down, k, s, LadderKind::create);
      EXPECT_LT(max_diff(up, apply_map(w, k, k, s)), 1e-15);
    }
}

TEST(FciGraphSet, MixedOrbitalCounts) {
  EXPECT_THROW(build_fci_graph_set(std::vector<SectorTriple>{{2, 0, 4}, {2, 0, 3}}), DomainError);
}

TEST(SectorSize, HalfFilledEightOrbitals) {
  const auto w = create_wavefunction({SectorTriple{8, 0, 8}});
  EXPECT_EQ(w.size(), 4900u);
  EXPECT_EQ(std::uint64_t{1} << 16, 65536u);
  EXPECT_EQ(binomial(8, 4) * binomial(8, 4), 4900u);
}
