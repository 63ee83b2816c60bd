#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "intentgc/graph.hpp"

namespace intentgc {

/// Sparse symmetric proximity matrix over the nodes of one side.
/// rows[i] holds (j, weight) pairs sorted by j, diagonal excluded.
struct ProximityMatrix {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows;

  std::uint32_t weight(std::uint32_t i, std::uint32_t j) const;
  std::size_t nonzeros() const;
};

/// Second-order proximity over aux type `aux`: weight(i, j) is the number of
/// distinct aux nodes adjacent to both i and j, ignoring aux nodes whose
/// degree on this side is >= hot_threshold. Cost is sum over kept aux nodes
/// of degree squared.
ProximityMatrix second_order_proximity(const TypedGraph& graph, NodeTypeId aux, Side side,
                                       std::uint32_t hot_threshold);

struct Neighbor {
  std::uint32_t node = 0;
  std::uint32_t weight = 0;  ///< 0 marks a padding entry
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exactly rho entries per node.
using Neighborhood = std::vector<std::vector<Neighbor>>;

/// Keeps the top-rho neighbors by weight (ties by ascending index). Nodes
/// with 1 <= k < rho neighbors are padded with their best neighbor; isolated
/// nodes are padded with themselves. Pads carry weight 0.
Neighborhood build_neighborhoods(const ProximityMatrix& weights, std::uint32_t rho);

struct RelationType {
  std::uint32_t id = 0;
  Side side = Side::user;
  NodeTypeId source_aux{};
  std::string aux_name;
};

/// The user-item network after translation.
struct TranslatedGraph {
  std::uint32_t rho = 0;
  std::uint32_t users = 0;
  std::uint32_t items = 0;
  std::vector<RelationType> relations;
  std::vector<Neighborhood> neighborhoods;  ///< aligned with relations
  std::vector<LabeledEdge> labeled_edges;
  NodeNames user_names;
  NodeNames item_names;
  std::string fingerprint;

  std::uint32_t node_count(Side s) const { return s == Side::user ? users : items; }
  const NodeNames& names(Side s) const { return s == Side::user ? user_names : item_names; }
  /// Neighborhoods of one side in relation order.
  std::vector<const Neighborhood*> side_neighborhoods(Side s) const;
  std::uint32_t relation_count(Side s) const;
};

struct TranslateOptions {
  std::uint32_t rho = 10;
  std::uint32_t hot_threshold = 20000;
  /// Per aux-type-name override of hot_threshold.
  std::map<std::string, std::uint32_t> hot_threshold_by_type;
  /// Aux type names to use; empty means all.
  std::vector<std::string> aux_types;

  std::uint32_t threshold_for(const std::string& aux_name) const;
};

/// Runs proximity + neighborhood construction for every (aux type, side)
/// pair with edges, user-side relations first, and copies the labels.
TranslatedGraph translate(const TypedGraph& graph, const TranslateOptions& options);

/// Stable fingerprint of a graph and the translation options applied to it.
std::string translation_fingerprint(const TypedGraph& graph, const TranslateOptions& options);

std::string format_translated(const TranslatedGraph& g);
TranslatedGraph parse_translated(const std::string& text, const std::string& source = "<translated>");
void write_translated(const TranslatedGraph& g, const std::filesystem::path& path);
TranslatedGraph load_translated(const std::filesystem::path& path);

}  // namespace intentgc
