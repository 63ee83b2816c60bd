#include <gtest/gtest.h>

#include <random>

#include "intentgc/error.hpp"
#include "intentgc/translate.hpp"
#include "test_support.hpp"

using namespace intentgc;
using intentgc::test::brute_proximity;
using intentgc::test::graph_from;
using intentgc::test::random_side_edges;

namespace {

const NodeTypeId kWord{2};

}  // namespace

TEST(Proximity, MatchesPairwiseOracleOnRandomGraphs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng() % 120);
    const std::uint32_t aux = 1 + static_cast<std::uint32_t>(rng() % 40);
    const auto users = random_side_edges(rng, n, aux, rng() % (4 * n));
    const auto items = random_side_edges(rng, 3, aux, 2);
    const auto g = graph_from(users, items, aux);
    for (std::uint32_t threshold : {1u, 2u, 3u, 5u, 1000u}) {
      const auto p = second_order_proximity(g, kWord, Side::user, threshold);
      const auto oracle = brute_proximity(users, threshold);
      std::size_t expected_nonzeros = 0;
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
          std::uint32_t want = 0;
          if (i != j) {
            auto it = oracle.find({std::min(i, j), std::max(i, j)});
            if (it != oracle.end()) want = it->second;
          }
          if (want) ++expected_nonzeros;
          ASSERT_EQ(p.weight(i, j), want) << "trial " << trial << " pair " << i << "," << j;
        }
      EXPECT_EQ(p.nonzeros(), expected_nonzeros);
    }
  }
}

TEST(Proximity, ThresholdOneDropsEverything) {
  std::mt19937_64 rng(3);
  const auto users = random_side_edges(rng, 30, 5, 100);
  const auto g = graph_from(users, random_side_edges(rng, 2, 5, 1), 5);
  EXPECT_EQ(second_order_proximity(g, kWord, Side::user, 1).nonzeros(), 0u);
  EXPECT_THROW(second_order_proximity(g, kWord, Side::user, 0), ConfigError);
  EXPECT_THROW(second_order_proximity(g, kItemType, Side::user, 5), ConfigError);
}

TEST(Neighborhoods, TopRhoByWeightThenIndexWithPadding) {
  ProximityMatrix m;
  m.rows = {{{1, 2}, {2, 5}, {3, 2}}, {{0, 2}}, {}, {{0, 2}}};
  const auto nb = build_neighborhoods(m, 2);
  EXPECT_EQ(nb[0], (std::vector<Neighbor>{{2, 5}, {1, 2}}));
  EXPECT_EQ(nb[1], (std::vector<Neighbor>{{0, 2}, {0, 0}}));
  EXPECT_EQ(nb[2], (std::vector<Neighbor>{{2, 0}, {2, 0}}));
  EXPECT_THROW(build_neighborhoods(m, 0), ConfigError);
}

TEST(Neighborhoods, PropertiesOnRandomGraphs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto users = random_side_edges(rng, 60, 15, 150);
    const auto g = graph_from(users, random_side_edges(rng, 2, 15, 1), 15);
    const auto p = second_order_proximity(g, kWord, Side::user, 8);
    const std::uint32_t rho = 1 + static_cast<std::uint32_t>(rng() % 6);
    const auto nb = build_neighborhoods(p, rho);
    for (std::uint32_t i = 0; i < nb.size(); ++i) {
      ASSERT_EQ(nb[i].size(), rho);
      std::size_t real = 0;
      for (std::size_t k = 0; k < rho; ++k) {
        const auto& e = nb[i][k];
        if (e.weight > 0) {
          ++real;
          EXPECT_EQ(p.weight(i, e.node), e.weight);
          EXPECT_NE(e.node, i);
        }
        if (k > 0) EXPECT_GE(nb[i][k - 1].weight, e.weight);
      }
      EXPECT_EQ(real, std::min<std::size_t>(rho, p.rows[i].size()));
      // nothing outside the kept set beats the weakest kept neighbor
      if (real == rho)
        for (const auto& [j, w] : p.rows[i]) {
          const bool kept = std::any_of(nb[i].begin(), nb[i].end(), [&](const Neighbor& e) { return e.node == j; });
          if (!kept) EXPECT_LE(w, nb[i].back().weight);
        }
    }
  }
}

TEST(Translate, BuildsOneRelationPerSideAndAuxType) {
  std::mt19937_64 rng(9);
  const auto users = random_side_edges(rng, 20, 6, 40);
  const auto items = random_side_edges(rng, 25, 6, 50);
  const auto g = graph_from(users, items, 6);
  TranslateOptions opt;
  opt.rho = 4;
  const auto t = translate(g, opt);
  ASSERT_EQ(t.relations.size(), 2u);
  EXPECT_EQ(t.relation_count(Side::user), 1u);
  EXPECT_EQ(t.relation_count(Side::item), 1u);
  EXPECT_EQ(t.neighborhoods[1].size(), 25u);
  EXPECT_EQ(t.labeled_edges, g.labeled_edges());
  EXPECT_EQ(t.fingerprint, translation_fingerprint(g, opt));

  opt.hot_threshold_by_type["word"] = 1;
  const auto cold = translate(g, opt);
  EXPECT_NE(cold.fingerprint, t.fingerprint);
  for (const auto& list : cold.neighborhoods[0])
    for (const auto& e : list) EXPECT_EQ(e.weight, 0u);

  opt.aux_types = {"brand"};
  EXPECT_THROW(translate(g, opt), ConfigError);
}

TEST(Translate, TextFormatRoundTrips) {
  std::mt19937_64 rng(10);
  const auto g = graph_from(random_side_edges(rng, 15, 4, 30), random_side_edges(rng, 12, 4, 20), 4);
  TranslateOptions opt;
  opt.rho = 3;
  const auto t = translate(g, opt);
  const auto text = format_translated(t);
  const auto back = parse_translated(text);
  EXPECT_EQ(back.rho, 3u);
  EXPECT_EQ(back.fingerprint, t.fingerprint);
  ASSERT_EQ(back.neighborhoods.size(), t.neighborhoods.size());
  for (std::size_t r = 0; r < t.neighborhoods.size(); ++r) EXPECT_EQ(back.neighborhoods[r], t.neighborhoods[r]);
  EXPECT_EQ(format_translated(back), text);
}

TEST(Translate, RejectsCorruptText) {
  EXPECT_THROW(parse_translated("#rho 2\n#bogus\n"), ParseError);
  EXPECT_THROW(parse_translated("#nodes user 1\n"), ParseError);
}
