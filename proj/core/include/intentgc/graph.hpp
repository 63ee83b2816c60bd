#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace intentgc {

/// Index into the node-type table. 0 is the user type, 1 the item type,
/// every id >= 2 is an auxiliary type (words, brands, shops, ...).
struct NodeTypeId {
  std::uint32_t value = 0;
  auto operator<=>(const NodeTypeId&) const = default;
};

inline constexpr NodeTypeId kUserType{0};
inline constexpr NodeTypeId kItemType{1};

enum class Side { user, item };

inline NodeTypeId type_of(Side s) { return s == Side::user ? kUserType : kItemType; }
std::string to_string(Side s);
Side parse_side(const std::string& text);

using LabeledEdge = std::pair<std::uint32_t, std::uint32_t>;  // (user, item)

/// Bidirectional string id <-> dense index mapping for one node type.
class NodeNames {
 public:
  std::optional<std::uint32_t> find(const std::string& id) const;
  const std::string& name(std::uint32_t index) const { return names_[index]; }
  std::size_t size() const noexcept { return names_.size(); }
  /// Binds id to index; both must be unused.
  void bind(const std::string& id, std::uint32_t index);
  /// Gives every index below `count` a name, using the decimal index for unnamed slots.
  void fill_defaults(std::uint32_t count);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// The original heterogeneous network: typed nodes, labeled user-item edges,
/// and auxiliary edges between users/items and auxiliary nodes.
///
/// Built incrementally then frozen by finalize(), which deduplicates edges,
/// builds symmetric adjacency and validates every invariant. Immutable after.
class TypedGraph {
 public:
  struct AuxAdjacency {
    /// side node -> sorted distinct aux nodes
    std::vector<std::vector<std::uint32_t>> side_to_aux;
    /// aux node -> sorted distinct side nodes
    std::vector<std::vector<std::uint32_t>> aux_to_side;
    bool empty() const noexcept;
  };

  TypedGraph();

  /// Declares a type. "user" and "item" are pre-declared with count 0 and are
  /// resized by declaring them again.
  NodeTypeId declare_type(const std::string& name, std::uint32_t count);
  void add_label(std::uint32_t user, std::uint32_t item);
  void add_aux_edge(Side side, std::uint32_t side_node, NodeTypeId aux, std::uint32_t aux_node);
  void set_category(std::uint32_t item, std::uint32_t category, double weight);
  void finalize();

  std::uint32_t type_count() const noexcept { return static_cast<std::uint32_t>(type_names_.size()); }
  const std::string& type_name(NodeTypeId t) const { return type_names_.at(t.value); }
  std::optional<NodeTypeId> find_type(const std::string& name) const;
  std::uint32_t node_count(NodeTypeId t) const { return node_counts_.at(t.value); }
  std::uint32_t user_count() const { return node_counts_[0]; }
  std::uint32_t item_count() const { return node_counts_[1]; }

  const std::vector<LabeledEdge>& labeled_edges() const noexcept { return labels_; }
  /// Adjacency between `side` and aux type `aux`; empty when no such edges exist.
  const AuxAdjacency& aux(Side side, NodeTypeId aux) const;
  bool has_label(std::uint32_t user, std::uint32_t item) const;
  /// Items labeled by `user`, sorted.
  const std::vector<std::uint32_t>& user_items(std::uint32_t user) const { return user_items_.at(user); }

  std::uint32_t leaf_category(std::uint32_t item) const { return leaf_category_.at(item); }
  double item_weight(std::uint32_t item) const { return item_weight_.at(item); }
  std::uint32_t category_count() const noexcept { return category_count_; }

  NodeNames& names(NodeTypeId t) { return names_.at(t.value); }
  const NodeNames& names(NodeTypeId t) const { return names_.at(t.value); }
  NodeNames& category_names() { return category_names_; }
  const NodeNames& category_names() const { return category_names_; }

  bool finalized() const noexcept { return finalized_; }

 private:
  void check_mutable() const;
  void check_index(NodeTypeId t, std::uint32_t index) const;

  std::vector<std::string> type_names_;
  std::vector<std::uint32_t> node_counts_;
  std::vector<NodeNames> names_;
  NodeNames category_names_;

  std::vector<LabeledEdge> labels_;
  std::vector<std::vector<std::uint32_t>> user_items_;
  // [side][aux type]
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pending_aux_[2];
  std::vector<NodeTypeId> pending_aux_type_[2];
  std::vector<AuxAdjacency> aux_[2];
  std::vector<std::uint32_t> leaf_category_;
  std::vector<double> item_weight_;
  std::vector<bool> has_category_;
  std::uint32_t category_count_ = 0;
  bool finalized_ = false;
};

/// Parses the sectioned text graph format (see docs/formats.md). Node string
/// ids are resolved through `dictionary` when given, otherwise through the
/// optional id listing after `#nodes`, otherwise in order of first appearance.
TypedGraph load_graph(const std::filesystem::path& path,
                      const std::filesystem::path& dictionary = {});
TypedGraph parse_graph(const std::string& text, const std::string& source = "<graph>",
                       const std::string& dictionary_text = {});
std::string format_graph(const TypedGraph& graph);
void write_graph(const TypedGraph& graph, const std::filesystem::path& path);

/// `typeName<TAB>stringId<TAB>denseIndex` lines for every named node.
std::string format_dictionary(const TypedGraph& graph);
void write_dictionary(const TypedGraph& graph, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace intentgc
