#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "intentgc/config.hpp"
#include "intentgc/features.hpp"
#include "intentgc/graph.hpp"

namespace intentgc {

/// Planted block structure: user block b prefers item block b (mod item_blocks).
struct SyntheticSpec {
  std::uint32_t users = 200;
  std::uint32_t items = 200;
  std::uint32_t user_blocks = 2;
  std::uint32_t item_blocks = 2;
  std::uint32_t aux_types = 1;
  std::uint32_t aux_per_type = 20;  ///< aux nodes per type
  std::uint32_t aux_links = 3;      ///< aux edges per user/item per type
  double noise = 0.1;               ///< chance a label leaves the planted block
  double aux_noise = 0.1;           ///< chance an aux edge leaves the planted block
  std::uint32_t labels_per_user = 10;
  std::uint32_t categories = 4;
  std::uint32_t feature_width = 8;  ///< continuous signal field width
  double signal = 0.5;              ///< block signal strength in the continuous field
  std::uint64_t seed = 1;

  static SyntheticSpec from(const Config& config);
  void validate() const;
  /// Planted item block of a user block.
  std::uint32_t target_block(std::uint32_t user_block) const { return user_block % item_blocks; }
};

struct SyntheticData {
  TypedGraph graph;
  FeatureFile features;
  /// Every planted (same-block) user-item pair that is not a training label.
  std::vector<LabeledEdge> test;
  std::vector<std::uint32_t> user_block;
  std::vector<std::uint32_t> item_block;
};

/// Deterministic per seed. Labels, features and categories use streams that
/// do not depend on aux_types, so adding an aux type only adds aux edges.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

std::string format_pairs(const std::vector<LabeledEdge>& pairs, const TypedGraph& graph);

struct SyntheticPaths {
  std::filesystem::path graph, features, test, dictionary;
  static SyntheticPaths in(const std::filesystem::path& dir);
};
void write_synthetic(const SyntheticData& data, const SyntheticPaths& paths);

}  // namespace intentgc
