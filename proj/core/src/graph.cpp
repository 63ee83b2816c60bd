#include "intentgc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

std::string to_string(Side s) { return s == Side::user ? "user" : "item"; }

Side parse_side(const std::string& text) {
  if (text == "user") return Side::user;
  if (text == "item") return Side::item;
  throw ConfigError("unknown side '" + text + "' (expected user|item)");
}

std::optional<std::uint32_t> NodeNames::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void NodeNames::bind(const std::string& id, std::uint32_t index) {
  if (index_.count(id)) throw Error("duplicate node id '" + id + "'");
  if (index >= names_.size()) names_.resize(index + 1);
  if (!names_[index].empty()) throw Error("index " + std::to_string(index) + " already bound to '" + names_[index] + "'");
  names_[index] = id;
  index_.emplace(id, index);
}

void NodeNames::fill_defaults(std::uint32_t count) {
  if (names_.size() < count) names_.resize(count);
  for (std::uint32_t i = 0; i < names_.size(); ++i) {
    if (!names_[i].empty()) continue;
    std::string candidate = std::to_string(i);
    while (index_.count(candidate)) candidate = "_" + candidate;
    names_[i] = candidate;
    index_.emplace(candidate, i);
  }
}

bool TypedGraph::AuxAdjacency::empty() const noexcept {
  for (const auto& a : side_to_aux)
    if (!a.empty()) return false;
  return true;
}

TypedGraph::TypedGraph() {
  type_names_ = {"user", "item"};
  node_counts_ = {0, 0};
  names_.resize(2);
}

void TypedGraph::check_mutable() const {
  if (finalized_) throw Error("graph is finalized");
}

NodeTypeId TypedGraph::declare_type(const std::string& name, std::uint32_t count) {
  check_mutable();
  if (name.empty()) throw SchemaMismatch("empty node type name");
  if (auto existing = find_type(name)) {
    node_counts_[existing->value] = count;
    return *existing;
  }
  type_names_.push_back(name);
  node_counts_.push_back(count);
  names_.emplace_back();
  return NodeTypeId{static_cast<std::uint32_t>(type_names_.size() - 1)};
}

std::optional<NodeTypeId> TypedGraph::find_type(const std::string& name) const {
  for (std::uint32_t i = 0; i < type_names_.size(); ++i)
    if (type_names_[i] == name) return NodeTypeId{i};
  return std::nullopt;
}

void TypedGraph::check_index(NodeTypeId t, std::uint32_t index) const {
  if (t.value >= node_counts_.size()) throw IndexOutOfRange("unknown node type " + std::to_string(t.value));
  if (index >= node_counts_[t.value])
    throw IndexOutOfRange(type_names_[t.value] + " index " + std::to_string(index) + " out of range (count " +
                          std::to_string(node_counts_[t.value]) + ")");
}

void TypedGraph::add_label(std::uint32_t user, std::uint32_t item) {
  check_mutable();
  check_index(kUserType, user);
  check_index(kItemType, item);
  labels_.emplace_back(user, item);
}

void TypedGraph::add_aux_edge(Side side, std::uint32_t side_node, NodeTypeId aux, std::uint32_t aux_node) {
  check_mutable();
  if (aux.value < 2) throw SchemaMismatch("auxiliary edges must end at a node type >= 2");
  check_index(type_of(side), side_node);
  check_index(aux, aux_node);
  const int s = side == Side::user ? 0 : 1;
  pending_aux_[s].emplace_back(side_node, aux_node);
  pending_aux_type_[s].push_back(aux);
}

void TypedGraph::set_category(std::uint32_t item, std::uint32_t category, double weight) {
  check_mutable();
  check_index(kItemType, item);
  if (!(weight >= 0) || !std::isfinite(weight))
    throw SchemaMismatch("item weight must be finite and non-negative");
  if (leaf_category_.size() < node_counts_[1]) {
    leaf_category_.resize(node_counts_[1], 0);
    item_weight_.resize(node_counts_[1], 0);
    has_category_.resize(node_counts_[1], false);
  }
  leaf_category_[item] = category;
  item_weight_[item] = weight;
  has_category_[item] = true;
  category_count_ = std::max(category_count_, category + 1);
}

void TypedGraph::finalize() {
  check_mutable();
  const std::uint32_t users = node_counts_[0];
  const std::uint32_t items = node_counts_[1];

  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  user_items_.assign(users, {});
  for (const auto& [u, i] : labels_) user_items_[u].push_back(i);

  for (int s = 0; s < 2; ++s) {
    const std::uint32_t side_count = node_counts_[s];
    aux_[s].assign(type_names_.size(), {});
    for (std::uint32_t t = 2; t < type_names_.size(); ++t) {
      aux_[s][t].side_to_aux.assign(side_count, {});
      aux_[s][t].aux_to_side.assign(node_counts_[t], {});
    }
    for (std::size_t e = 0; e < pending_aux_[s].size(); ++e) {
      const auto [node, aux_node] = pending_aux_[s][e];
      auto& adj = aux_[s][pending_aux_type_[s][e].value];
      adj.side_to_aux[node].push_back(aux_node);
      adj.aux_to_side[aux_node].push_back(node);
    }
    for (auto& adj : aux_[s]) {
      for (auto* lists : {&adj.side_to_aux, &adj.aux_to_side}) {
        for (auto& l : *lists) {
          std::sort(l.begin(), l.end());
          l.erase(std::unique(l.begin(), l.end()), l.end());
        }
      }
    }
    pending_aux_[s].clear();
    pending_aux_type_[s].clear();
  }

  leaf_category_.resize(items, 0);
  item_weight_.resize(items, 0);
  has_category_.resize(items, false);
  for (std::uint32_t i = 0; i < items; ++i)
    if (!has_category_[i])
      throw SchemaMismatch("item " + (i < names_[1].size() ? "'" + names_[1].name(i) + "'" : std::to_string(i)) +
                           " has no leaf category");

  for (std::uint32_t t = 0; t < type_names_.size(); ++t) names_[t].fill_defaults(node_counts_[t]);
  category_names_.fill_defaults(category_count_);
  finalized_ = true;
}

const TypedGraph::AuxAdjacency& TypedGraph::aux(Side side, NodeTypeId aux) const {
  static const AuxAdjacency kEmpty;
  const auto& v = aux_[side == Side::user ? 0 : 1];
  if (aux.value < 2 || aux.value >= v.size()) return kEmpty;
  return v[aux.value];
}

bool TypedGraph::has_label(std::uint32_t user, std::uint32_t item) const {
  if (user >= user_items_.size()) return false;
  const auto& items = user_items_[user];
  return std::binary_search(items.begin(), items.end(), item);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

using text::split;
using text::trim;

struct TypeResolver {
  bool initialized = false;
  std::uint32_t count = 0;
  bool explicit_ids = false;  // listing or dictionary present
  std::uint32_t next_free = 0;
};

class GraphParser {
 public:
  GraphParser(std::string source, const std::string& dictionary_text)
      : source_(std::move(source)), has_dictionary_(!dictionary_text.empty()) {
    if (has_dictionary_) parse_dictionary(dictionary_text);
  }

  TypedGraph parse(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    Section section = Section::none;
    NodeTypeId listing_type{};
    std::uint32_t listing_next = 0;
    NodeTypeId edge_a{}, edge_b{};

    while (std::getline(in, raw)) {
      ++lineno;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line[0] == '#') {
        const auto parts = split(line, ' ', true);
        const std::string& tag = parts[0];
        if (tag == "#nodes") {
          if (parts.size() != 3) fail(lineno, "expected '#nodes <type> <count>'");
          const auto count = parse_u32(parts[2], lineno);
          if (!edges_started_) {
            listing_type = graph_.declare_type(parts[1], count);
          } else {
            fail(lineno, "#nodes must precede all edge sections");
          }
          section = Section::nodes;
          listing_next = 0;
          declared_.push_back(listing_type);
        } else if (tag == "#edges") {
          if (parts.size() != 3) fail(lineno, "expected '#edges <type-a> <type-b>'");
          begin_edges();
          edge_a = type_for(parts[1], lineno);
          edge_b = type_for(parts[2], lineno);
          if (edge_a.value < 2 && edge_b.value < 2)
            fail(lineno, "user-item edges belong in #labels; user-user and item-item edges are not allowed");
          if (edge_a.value >= 2 && edge_b.value >= 2)
            fail(lineno, "edges between two auxiliary types are not allowed");
          section = Section::edges;
        } else if (tag == "#labels") {
          begin_edges();
          section = Section::labels;
        } else if (tag == "#category") {
          begin_edges();
          section = Section::category;
        } else {
          fail(lineno, "unknown section header '" + tag + "'");
        }
        continue;
      }

      const auto fields = split(line, '\t', false);
      switch (section) {
        case Section::none:
          fail(lineno, "data line outside of any section");
        case Section::nodes: {
          if (fields.size() != 1) fail(lineno, "node listing lines hold exactly one id");
          auto& res = resolver(listing_type);
          if (has_dictionary_) {
            lookup(listing_type, fields[0], lineno);
          } else {
            if (listing_next >= res.count) fail_range(lineno, "more ids listed than declared count");
            graph_.names(listing_type).bind(fields[0], listing_next++);
            res.explicit_ids = true;
          }
          break;
        }
        case Section::labels: {
          if (fields.size() != 2) fail(lineno, "expected 'userId<TAB>itemId'");
          const auto u = lookup(kUserType, fields[0], lineno);
          const auto i = lookup(kItemType, fields[1], lineno);
          graph_.add_label(u, i);
          break;
        }
        case Section::edges: {
          if (fields.size() != 2) fail(lineno, "expected 'srcId<TAB>dstId'");
          const auto a = lookup(edge_a, fields[0], lineno);
          const auto b = lookup(edge_b, fields[1], lineno);
          if (edge_a.value < 2)
            graph_.add_aux_edge(edge_a == kUserType ? Side::user : Side::item, a, edge_b, b);
          else
            graph_.add_aux_edge(edge_b == kUserType ? Side::user : Side::item, b, edge_a, a);
          break;
        }
        case Section::category: {
          if (fields.size() != 3) fail(lineno, "expected 'itemId<TAB>categoryId<TAB>weight'");
          const auto item = lookup(kItemType, fields[0], lineno);
          auto& cats = graph_.category_names();
          std::uint32_t cat;
          if (auto found = cats.find(fields[1])) {
            cat = *found;
          } else {
            cat = static_cast<std::uint32_t>(cats.size());
            cats.bind(fields[1], cat);
          }
          const double weight = parse_double(fields[2], lineno);
          if (!(weight >= 0) || !std::isfinite(weight)) fail(lineno, "item weight must be finite and >= 0");
          graph_.set_category(item, cat, weight);
          break;
        }
      }
    }
    if (graph_.user_count() == 0 && !declared(kUserType)) throw ParseError(source_, 0, "missing '#nodes user <count>'");
    if (graph_.item_count() == 0 && !declared(kItemType)) throw ParseError(source_, 0, "missing '#nodes item <count>'");
    graph_.finalize();
    return std::move(graph_);
  }

 private:
  enum class Section { none, nodes, labels, edges, category };

  [[noreturn]] void fail(std::size_t line, const std::string& what) const { throw ParseError(source_, line, what); }
  [[noreturn]] void fail_range(std::size_t line, const std::string& what) const {
    throw IndexOutOfRange(source_ + ":" + std::to_string(line) + ": " + what);
  }

  bool declared(NodeTypeId t) const { return std::find(declared_.begin(), declared_.end(), t) != declared_.end(); }

  void begin_edges() {
    if (!edges_started_) {
      edges_started_ = true;
      for (std::uint32_t t = 0; t < graph_.type_count(); ++t) resolver(NodeTypeId{t});
    }
  }

  TypeResolver& resolver(NodeTypeId t) {
    if (resolvers_.size() <= t.value) resolvers_.resize(t.value + 1);
    auto& r = resolvers_[t.value];
    if (!r.initialized) {
      r.initialized = true;
      r.count = graph_.node_count(t);
      r.explicit_ids = has_dictionary_;
    }
    r.count = graph_.node_count(t);
    return r;
  }

  NodeTypeId type_for(const std::string& name, std::size_t line) const {
    auto t = graph_.find_type(name);
    if (!t || !declared(*t)) fail(line, "undeclared node type '" + name + "'");
    return *t;
  }

  std::uint32_t lookup(NodeTypeId t, const std::string& id, std::size_t line) {
    auto& res = resolver(t);
    const std::string& tname = graph_.type_name(t);
    if (has_dictionary_) {
      auto it = dictionary_.find(tname + '\t' + id);
      if (it == dictionary_.end()) fail(line, "id '" + id + "' of type " + tname + " not in dictionary");
      if (it->second >= res.count)
        fail_range(line, tname + " index " + std::to_string(it->second) + " out of range (count " +
                             std::to_string(res.count) + ")");
      if (!graph_.names(t).find(id)) graph_.names(t).bind(id, it->second);
      return it->second;
    }
    if (auto found = graph_.names(t).find(id)) return *found;
    if (res.explicit_ids) fail(line, "id '" + id + "' not listed under #nodes " + tname);
    std::uint32_t index;
    if (text::is_unsigned(id)) {
      const auto parsed = parse_u64(id, line);
      if (parsed >= res.count)
        fail_range(line, tname + " index " + id + " out of range (count " + std::to_string(res.count) + ")");
      index = static_cast<std::uint32_t>(parsed);
    } else {
      while (res.next_free < graph_.names(t).size() && !graph_.names(t).name(res.next_free).empty()) ++res.next_free;
      index = res.next_free;
      if (index >= res.count)
        fail_range(line, "id '" + id + "' exceeds declared " + tname + " count " + std::to_string(res.count));
    }
    try {
      graph_.names(t).bind(id, index);
    } catch (const Error& e) {
      fail(line, e.what());
    }
    return index;
  }

  void parse_dictionary(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      const auto f = split(line, '\t', false);
      if (f.size() != 3) throw ParseError("<dictionary>", lineno, "expected 'type<TAB>id<TAB>index'");
      const auto index = text::parse_u64(f[2]);
      if (!index || *index > UINT32_MAX) throw ParseError("<dictionary>", lineno, "bad index '" + f[2] + "'");
      dictionary_[f[0] + '\t' + f[1]] = static_cast<std::uint32_t>(*index);
    }
  }

  std::uint32_t parse_u32(const std::string& s, std::size_t line) const {
    const auto v = parse_u64(s, line);
    if (v > UINT32_MAX) fail(line, "count too large");
    return static_cast<std::uint32_t>(v);
  }
  std::uint64_t parse_u64(const std::string& s, std::size_t line) const {
    auto v = text::parse_u64(s);
    if (!v) fail(line, "expected a non-negative integer, got '" + s + "'");
    return *v;
  }
  double parse_double(const std::string& s, std::size_t line) const {
    auto v = text::parse_double(s);
    if (!v) fail(line, "expected a number, got '" + s + "'");
    return *v;
  }

  std::string source_;
  bool has_dictionary_ = false;
  std::unordered_map<std::string, std::uint32_t> dictionary_;
  TypedGraph graph_;
  std::vector<TypeResolver> resolvers_;
  std::vector<NodeTypeId> declared_;
  bool edges_started_ = false;
};

}  // namespace

TypedGraph parse_graph(const std::string& text, const std::string& source, const std::string& dictionary_text) {
  return GraphParser(source, dictionary_text).parse(text);
}

TypedGraph load_graph(const std::filesystem::path& path, const std::filesystem::path& dictionary) {
  const std::string text = read_text_file(path);
  const std::string dict = dictionary.empty() ? std::string() : read_text_file(dictionary);
  return parse_graph(text, path.string(), dict);
}

std::string format_graph(const TypedGraph& g) {
  std::ostringstream out;
  for (std::uint32_t t = 0; t < g.type_count(); ++t) {
    const NodeTypeId type{t};
    out << "#nodes " << g.type_name(type) << ' ' << g.node_count(type) << '\n';
    for (std::uint32_t i = 0; i < g.node_count(type); ++i) out << g.names(type).name(i) << '\n';
  }
  out << "#labels\n";
  for (const auto& [u, i] : g.labeled_edges())
    out << g.names(kUserType).name(u) << '\t' << g.names(kItemType).name(i) << '\n';
  for (Side side : {Side::user, Side::item}) {
    const NodeTypeId st = type_of(side);
    for (std::uint32_t t = 2; t < g.type_count(); ++t) {
      const auto& adj = g.aux(side, NodeTypeId{t});
      if (adj.empty()) continue;
      out << "#edges " << g.type_name(st) << ' ' << g.type_name(NodeTypeId{t}) << '\n';
      for (std::uint32_t n = 0; n < adj.side_to_aux.size(); ++n)
        for (auto a : adj.side_to_aux[n])
          out << g.names(st).name(n) << '\t' << g.names(NodeTypeId{t}).name(a) << '\n';
    }
  }
  out << "#category\n";
  for (std::uint32_t i = 0; i < g.item_count(); ++i)
    out << g.names(kItemType).name(i) << '\t' << g.category_names().name(g.leaf_category(i)) << '\t'
        << text::format_double(g.item_weight(i)) << '\n';
  return out.str();
}

void write_graph(const TypedGraph& graph, const std::filesystem::path& path) {
  write_text_file(path, format_graph(graph));
}

std::string format_dictionary(const TypedGraph& g) {
  std::ostringstream out;
  for (std::uint32_t t = 0; t < g.type_count(); ++t) {
    const NodeTypeId type{t};
    for (std::uint32_t i = 0; i < g.node_count(type); ++i)
      out << g.type_name(type) << '\t' << g.names(type).name(i) << '\t' << i << '\n';
  }
  return out.str();
}

void write_dictionary(const TypedGraph& graph, const std::filesystem::path& path) {
  write_text_file(path, format_dictionary(graph));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace intentgc
