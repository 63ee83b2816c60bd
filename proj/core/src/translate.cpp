#include "intentgc/translate.hpp"

#include <algorithm>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

std::uint32_t ProximityMatrix::weight(std::uint32_t i, std::uint32_t j) const {
  if (i >= rows.size()) return 0;
  const auto& r = rows[i];
  auto it = std::lower_bound(r.begin(), r.end(), std::make_pair(j, 0u),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  return it != r.end() && it->first == j ? it->second : 0;
}

std::size_t ProximityMatrix::nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

ProximityMatrix second_order_proximity(const TypedGraph& graph, NodeTypeId aux, Side side,
                                       std::uint32_t hot_threshold) {
  if (aux.value < 2) throw ConfigError("second_order_proximity needs an auxiliary type (id >= 2)");
  if (hot_threshold < 1) throw ConfigError("hot_threshold must be >= 1");
  const std::uint32_t n = graph.node_count(type_of(side));
  ProximityMatrix out;
  out.rows.resize(n);
  const auto& adj = graph.aux(side, aux);
  if (adj.side_to_aux.empty()) return out;

  std::vector<std::uint32_t> counts(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t i = 0; i < n; ++i) {
    touched.clear();
    for (auto w : adj.side_to_aux[i]) {
      const auto& members = adj.aux_to_side[w];
      if (members.size() >= hot_threshold) continue;
      for (auto j : members) {
        if (j == i) continue;
        if (counts[j]++ == 0) touched.push_back(j);
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& row = out.rows[i];
    row.reserve(touched.size());
    for (auto j : touched) {
      row.emplace_back(j, counts[j]);
      counts[j] = 0;
    }
  }
  return out;
}

Neighborhood build_neighborhoods(const ProximityMatrix& weights, std::uint32_t rho) {
  if (rho < 1) throw ConfigError("rho must be >= 1");
  Neighborhood out(weights.rows.size());
  std::vector<Neighbor> candidates;
  for (std::uint32_t i = 0; i < weights.rows.size(); ++i) {
    candidates.clear();
    for (const auto& [j, w] : weights.rows[i])
      if (w > 0 && j != i) candidates.push_back({j, w});
    const auto keep = std::min<std::size_t>(rho, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                        return a.weight != b.weight ? a.weight > b.weight : a.node < b.node;
                      });
    auto& list = out[i];
    list.assign(candidates.begin(), candidates.begin() + keep);
    const std::uint32_t pad = list.empty() ? i : list.front().node;
    while (list.size() < rho) list.push_back({pad, 0});
  }
  return out;
}

std::vector<const Neighborhood*> TranslatedGraph::side_neighborhoods(Side s) const {
  std::vector<const Neighborhood*> out;
  for (std::size_t r = 0; r < relations.size(); ++r)
    if (relations[r].side == s) out.push_back(&neighborhoods[r]);
  return out;
}

std::uint32_t TranslatedGraph::relation_count(Side s) const {
  return static_cast<std::uint32_t>(
      std::count_if(relations.begin(), relations.end(), [s](const RelationType& r) { return r.side == s; }));
}

std::uint32_t TranslateOptions::threshold_for(const std::string& aux_name) const {
  auto it = hot_threshold_by_type.find(aux_name);
  return it == hot_threshold_by_type.end() ? hot_threshold : it->second;
}

std::string translation_fingerprint(const TypedGraph& graph, const TranslateOptions& options) {
  std::ostringstream key;
  key << "rho=" << options.rho << "\nhot=" << options.hot_threshold << '\n';
  for (const auto& [name, t] : options.hot_threshold_by_type) key << "hot." << name << '=' << t << '\n';
  key << "aux=";
  for (const auto& a : options.aux_types) key << a << ',';
  key << '\n' << format_graph(graph);
  return text::hex64(text::fnv1a(key.str()));
}

TranslatedGraph translate(const TypedGraph& graph, const TranslateOptions& options) {
  if (options.rho < 1) throw ConfigError("rho must be >= 1");
  for (const auto& name : options.aux_types) {
    auto t = graph.find_type(name);
    if (!t || t->value < 2) throw ConfigError("unknown auxiliary type '" + name + "'");
  }
  TranslatedGraph out;
  out.rho = options.rho;
  out.users = graph.user_count();
  out.items = graph.item_count();
  out.labeled_edges = graph.labeled_edges();
  for (std::uint32_t i = 0; i < out.users; ++i) out.user_names.bind(graph.names(kUserType).name(i), i);
  for (std::uint32_t i = 0; i < out.items; ++i) out.item_names.bind(graph.names(kItemType).name(i), i);

  for (Side side : {Side::user, Side::item}) {
    for (std::uint32_t t = 2; t < graph.type_count(); ++t) {
      const NodeTypeId aux{t};
      const std::string& name = graph.type_name(aux);
      if (!options.aux_types.empty() &&
          std::find(options.aux_types.begin(), options.aux_types.end(), name) == options.aux_types.end())
        continue;
      if (graph.aux(side, aux).empty()) continue;
      const auto weights = second_order_proximity(graph, aux, side, options.threshold_for(name));
      RelationType rel;
      rel.id = static_cast<std::uint32_t>(out.relations.size());
      rel.side = side;
      rel.source_aux = aux;
      rel.aux_name = name;
      out.relations.push_back(rel);
      out.neighborhoods.push_back(build_neighborhoods(weights, options.rho));
    }
  }
  out.fingerprint = translation_fingerprint(graph, options);
  return out;
}

std::string format_translated(const TranslatedGraph& g) {
  std::ostringstream out;
  out << "#fingerprint " << g.fingerprint << '\n';
  out << "#rho " << g.rho << '\n';
  for (Side side : {Side::user, Side::item}) {
    out << "#nodes " << to_string(side) << ' ' << g.node_count(side) << '\n';
    for (std::uint32_t i = 0; i < g.node_count(side); ++i) out << g.names(side).name(i) << '\n';
  }
  out << "#labels\n";
  for (const auto& [u, i] : g.labeled_edges) out << g.user_names.name(u) << '\t' << g.item_names.name(i) << '\n';
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& rel = g.relations[r];
    out << "#relation " << to_string(rel.side) << ' ' << rel.aux_name << '\n';
    const auto& names = g.names(rel.side);
    const auto& hood = g.neighborhoods[r];
    for (std::uint32_t n = 0; n < hood.size(); ++n) {
      out << names.name(n) << '\t';
      for (std::size_t k = 0; k < hood[n].size(); ++k) {
        if (k) out << ',';
        out << names.name(hood[n][k].node) << ':' << hood[n][k].weight;
      }
      out << '\n';
    }
  }
  return out.str();
}

TranslatedGraph parse_translated(const std::string& content, const std::string& source) {
  TranslatedGraph g;
  std::istringstream in(content);
  std::string raw;
  std::size_t lineno = 0;
  enum class Section { none, nodes, labels, relation } section = Section::none;
  Side current = Side::user;
  std::uint32_t listed = 0;
  std::vector<bool> filled;
  bool have_rho = false;

  auto fail = [&](const std::string& what) -> void { throw ParseError(source, lineno, what); };
  auto lookup = [&](Side s, const std::string& id) {
    auto idx = g.names(s).find(id);
    if (!idx) throw IndexOutOfRange(source + ":" + std::to_string(lineno) + ": unknown " + to_string(s) + " id '" + id + "'");
    return *idx;
  };
  auto finish_relation = [&]() {
    if (section != Section::relation) return;
    for (bool f : filled)
      if (!f) fail("relation '" + g.relations.back().aux_name + "' is missing nodes");
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto parts = text::split(line, ' ', true);
      if (parts[0] == "#fingerprint") {
        if (parts.size() != 2) fail("expected '#fingerprint <hex>'");
        g.fingerprint = parts[1];
      } else if (parts[0] == "#rho") {
        auto v = parts.size() == 2 ? text::parse_u64(parts[1]) : std::nullopt;
        if (!v || *v < 1) fail("expected '#rho <positive integer>'");
        g.rho = static_cast<std::uint32_t>(*v);
        have_rho = true;
      } else if (parts[0] == "#nodes") {
        finish_relation();
        if (parts.size() != 3) fail("expected '#nodes <user|item> <count>'");
        if (parts[1] != "user" && parts[1] != "item") fail("translated graphs hold only user and item nodes");
        current = parse_side(parts[1]);
        auto v = text::parse_u64(parts[2]);
        if (!v) fail("bad count");
        (current == Side::user ? g.users : g.items) = static_cast<std::uint32_t>(*v);
        listed = 0;
        section = Section::nodes;
      } else if (parts[0] == "#labels") {
        finish_relation();
        section = Section::labels;
      } else if (parts[0] == "#relation") {
        finish_relation();
        if (parts.size() != 3) fail("expected '#relation <side> <aux-type-name>'");
        if (!have_rho) fail("#rho must precede relations");
        RelationType rel;
        rel.id = static_cast<std::uint32_t>(g.relations.size());
        rel.side = parts[1] == "user" ? Side::user : parts[1] == "item" ? Side::item : (fail("bad side"), Side::user);
        rel.aux_name = parts[2];
        g.relations.push_back(rel);
        g.neighborhoods.emplace_back(g.node_count(rel.side));
        filled.assign(g.node_count(rel.side), false);
        current = rel.side;
        section = Section::relation;
      } else {
        fail("unknown header '" + parts[0] + "'");
      }
      continue;
    }
    const auto cols = text::split(line, '\t', false);
    switch (section) {
      case Section::none:
        fail("data outside of a section");
        break;
      case Section::nodes: {
        if (listed >= g.node_count(current))
          throw IndexOutOfRange(source + ":" + std::to_string(lineno) + ": more ids than declared");
        (current == Side::user ? g.user_names : g.item_names).bind(cols[0], listed++);
        break;
      }
      case Section::labels: {
        if (cols.size() != 2) fail("expected 'userId<TAB>itemId'");
        g.labeled_edges.emplace_back(lookup(Side::user, cols[0]), lookup(Side::item, cols[1]));
        break;
      }
      case Section::relation: {
        if (cols.size() != 2) fail("expected 'nodeId<TAB>neighborId:weight,...'");
        const auto node = lookup(current, cols[0]);
        if (filled[node]) fail("duplicate neighborhood for '" + cols[0] + "'");
        filled[node] = true;
        auto& list = g.neighborhoods.back()[node];
        for (const auto& entry : text::split(cols[1], ',', false)) {
          const auto colon = entry.rfind(':');
          if (colon == std::string::npos) fail("expected 'neighborId:weight'");
          auto w = text::parse_u64(entry.substr(colon + 1));
          if (!w) fail("bad weight in '" + entry + "'");
          list.push_back({lookup(current, entry.substr(0, colon)), static_cast<std::uint32_t>(*w)});
        }
        if (list.size() != g.rho)
          fail("neighborhood of '" + cols[0] + "' has " + std::to_string(list.size()) + " entries, expected rho=" +
               std::to_string(g.rho));
        break;
      }
    }
  }
  finish_relation();
  if (!have_rho) throw ParseError(source, 0, "missing #rho");
  std::sort(g.labeled_edges.begin(), g.labeled_edges.end());
  return g;
}

void write_translated(const TranslatedGraph& g, const std::filesystem::path& path) {
  write_text_file(path, format_translated(g));
}

TranslatedGraph load_translated(const std::filesystem::path& path) {
  return parse_translated(read_text_file(path), path.string());
}

}  // namespace intentgc
