#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "intentgc/error.hpp"
#include "intentgc/recommend.hpp"

using namespace intentgc;

namespace {

EmbeddingStore random_store(Side side, std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  EmbeddingStore s;
  s.side = side;
  s.z = Tensor<double>(n, d);
  for (auto& v : s.z.values()) v = g(rng);
  return s;
}

NodeNames names(const std::string& prefix, std::size_t n) {
  NodeNames out;
  for (std::size_t i = 0; i < n; ++i) out.bind(prefix + std::to_string(i), static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace

TEST(Recommend, ExactMatchesKnnExact) {
  const auto users = random_store(Side::user, 20, 6, 1);
  const auto items = random_store(Side::item, 50, 6, 2);
  KnnOptions o;
  o.k = 7;
  const auto lists = recommend(users, items, o);
  ASSERT_EQ(lists.size(), 20u);
  for (std::size_t u = 0; u < 20; ++u) {
    const auto ref = knn_exact(users.z.row(u), items.z, 7);
    ASSERT_EQ(lists[u].size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(lists[u][i].item, ref[i].item);
  }
}

TEST(Recommend, ApproximateReturnsRankedTopK) {
  const auto users = random_store(Side::user, 10, 16, 3);
  const auto items = random_store(Side::item, 500, 16, 4);
  KnnOptions o;
  o.method = KnnMethod::approximate;
  o.k = 5;
  for (const auto& list : recommend(users, items, o)) {
    ASSERT_EQ(list.size(), 5u);
    for (std::size_t i = 1; i < list.size(); ++i) EXPECT_TRUE(ranks_before(list[i - 1], list[i]));
  }
}

TEST(Recommend, WidthMismatchThrows) {
  KnnOptions o;
  EXPECT_THROW(recommend(random_store(Side::user, 2, 3, 1), random_store(Side::item, 2, 4, 1), o), SchemaMismatch);
}

TEST(Recommend, OptionsFromConfig) {
  Config c = Config::parse("knn_method = approximate\nknn_k = 3\nseed = 9\n");
  const auto o = KnnOptions::from(c);
  EXPECT_EQ(o.method, KnnMethod::approximate);
  EXPECT_EQ(o.k, 3u);
  EXPECT_EQ(o.ann.seed, 9u);
  EXPECT_THROW(KnnOptions::from(Config::parse("knn_method = fuzzy\n")), ConfigError);
  EXPECT_THROW(KnnOptions::from(Config::parse("knn_k = 0\n")), ConfigError);
}

TEST(Recommend, FormatListsNamesAndScores) {
  EmbeddingStore users, items;
  users.z = Tensor<double>(1, 1);
  users.z(0, 0) = 1;
  items.z = Tensor<double>(3, 1);
  items.z(0, 0) = 0.5;
  items.z(1, 0) = 2;
  items.z(2, 0) = 0.5;
  KnnOptions o;
  o.k = 2;
  const auto text = format_recommendations(recommend(users, items, o), names("u", 1), names("i", 3), o, "abc");
  EXPECT_EQ(text, "#method exact\n#k 2\n#fingerprint abc\nu0\ti1:2,i0:0.5\n");
}
