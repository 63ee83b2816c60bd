#include <gtest/gtest.h>

#include "intentgc/config.hpp"
#include "intentgc/error.hpp"
#include "intentgc/synthetic.hpp"

using namespace intentgc;

TEST(Config, ParsesValuesAndComments) {
  const auto c = Config::parse("# toy\nq = 1\nlearning_rate=0.5  # inline\n\ndense_widths = 4, 8\n");
  EXPECT_EQ(c.get_u64("q", 2), 1u);
  EXPECT_DOUBLE_EQ(c.get_double("learning_rate", 0), 0.5);
  EXPECT_EQ(c.get_u32_list("dense_widths", {}), (std::vector<std::uint32_t>{4, 8}));
  EXPECT_EQ(c.get_u64("L", 3), 3u);
}

TEST(Config, RejectsUnknownDuplicateAndMalformed) {
  EXPECT_THROW(Config::parse("qq = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("q = 1\nq = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("q\n"), ConfigError);
  EXPECT_THROW(Config::parse("q = two\n").get_u64("q", 0), ConfigError);
  EXPECT_THROW(Config::parse("margin = nan\n").get_double("margin", 0), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/dir/c.cfg"), ConfigError);
  Config c;
  EXPECT_THROW(c.set("bogus", "1"), ConfigError);
}

TEST(Config, PerTypeThresholdKeysAreKnown) {
  EXPECT_TRUE(is_known_config_key("hot_threshold.word"));
  EXPECT_TRUE(is_known_config_key("rho"));
  EXPECT_FALSE(is_known_config_key("hot_threshold."));
}

TEST(Config, FingerprintIgnoresOrderAndFormatting) {
  const auto a = Config::parse("q = 1\nrho = 4\n");
  const auto b = Config::parse("rho=4\n\n# c\nq   =   1\n");
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.normalized(), "q = 1\nrho = 4\n");
  EXPECT_NE(a.fingerprint(), Config::parse("q = 2\nrho = 4\n").fingerprint());
}

TEST(Config, SetOverridesValue) {
  auto c = Config::parse("seed = 1\n");
  c.set("seed", "9");
  EXPECT_EQ(c.get_u64("seed", 0), 9u);
}

TEST(Synthetic, ConfigDrivesGenerator) {
  const auto c = Config::parse("gen.users = 10\ngen.items = 12\ngen.noise = 0\ngen.labels_per_user = 3\nseed = 3\n");
  const auto spec = SyntheticSpec::from(c);
  EXPECT_EQ(spec.users, 10u);
  EXPECT_EQ(spec.seed, 3u);
  EXPECT_THROW(SyntheticSpec::from(Config::parse("gen.noise = 2\n")), ConfigError);
}
