#include <gtest/gtest.h>

#include "intentgc/error.hpp"
#include "intentgc/graph.hpp"
#include "test_support.hpp"

using namespace intentgc;

namespace {

const char* kSmall =
    "#nodes user 2\n"
    "alice\n"
    "bob\n"
    "#nodes item 3\n"
    "0\n"
    "1\n"
    "2\n"
    "#nodes brand 1\n"
    "#labels\n"
    "alice\t0\n"
    "bob\t2\n"
    "alice\t0\n"
    "#edges item brand\n"
    "0\tacme\n"
    "1\tacme\n"
    "#category\n"
    "0\tshoes\t2\n"
    "1\tshoes\t1.5\n"
    "2\thats\t1\n";

}  // namespace

TEST(Graph, ParsesSectionsAndDeduplicatesEdges) {
  const auto g = parse_graph(kSmall);
  EXPECT_EQ(g.user_count(), 2u);
  EXPECT_EQ(g.item_count(), 3u);
  ASSERT_EQ(g.labeled_edges().size(), 2u);
  EXPECT_TRUE(g.has_label(0, 0));
  EXPECT_TRUE(g.has_label(1, 2));
  EXPECT_FALSE(g.has_label(0, 2));
  const auto brand = g.find_type("brand");
  ASSERT_TRUE(brand);
  const auto& adj = g.aux(Side::item, *brand);
  EXPECT_EQ(adj.aux_to_side.at(0), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_TRUE(g.aux(Side::user, *brand).empty());
  EXPECT_EQ(g.category_count(), 2u);
  EXPECT_EQ(g.leaf_category(0), g.leaf_category(1));
  EXPECT_NE(g.leaf_category(0), g.leaf_category(2));
  EXPECT_DOUBLE_EQ(g.item_weight(1), 1.5);
}

TEST(Graph, FormatRoundTrips) {
  const auto g = parse_graph(kSmall);
  const auto text = format_graph(g);
  const auto back = parse_graph(text);
  EXPECT_EQ(format_graph(back), text);
  EXPECT_EQ(back.names(kUserType).name(1), "bob");
}

TEST(Graph, DictionaryFixesIndices) {
  const auto g = parse_graph(kSmall);
  const auto dict = format_dictionary(g);
  const auto again = parse_graph(format_graph(g), "<graph>", dict);
  EXPECT_EQ(format_dictionary(again), dict);
}

TEST(Graph, RejectsMalformedInput) {
  EXPECT_THROW(parse_graph("#nodes item 1\n#labels\n"), ParseError);
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 1\n#bogus\n"), ParseError);
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 1\n#labels\n0\n"), ParseError);
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 1\n#edges user item\n"), ParseError);
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 1\n#labels\n0\t5\n"), IndexOutOfRange);
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 1\n#category\n0\tc\t-1\n"), ParseError);
}

TEST(Graph, EveryItemNeedsACategory) {
  EXPECT_THROW(parse_graph("#nodes user 1\n#nodes item 2\n#category\n0\tc\t1\n"), SchemaMismatch);
}

TEST(Graph, FinalizedGraphIsImmutable) {
  auto g = parse_graph(kSmall);
  EXPECT_THROW(g.add_label(0, 1), Error);
}

TEST(Graph, BuilderChecksIndices) {
  TypedGraph g;
  g.declare_type("user", 2);
  g.declare_type("item", 2);
  EXPECT_THROW(g.add_label(2, 0), IndexOutOfRange);
  const auto word = g.declare_type("word", 1);
  EXPECT_THROW(g.add_aux_edge(Side::user, 0, kItemType, 0), SchemaMismatch);
  EXPECT_THROW(g.add_aux_edge(Side::user, 0, word, 1), IndexOutOfRange);
}
