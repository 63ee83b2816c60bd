#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "intentgc/graph.hpp"
#include "intentgc/intentnet.hpp"

namespace intentgc::test {

/// Raw (node, aux) pairs for one side, possibly with duplicates.
struct SideEdges {
  std::uint32_t nodes = 0;
  std::uint32_t aux = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

inline SideEdges random_side_edges(std::mt19937_64& rng, std::uint32_t nodes, std::uint32_t aux, std::size_t count) {
  SideEdges s{nodes, aux, {}};
  std::uniform_int_distribution<std::uint32_t> pn(0, nodes - 1), pa(0, aux - 1);
  for (std::size_t e = 0; e < count; ++e) s.edges.emplace_back(pn(rng), pa(rng));
  return s;
}

/// Users and items with one aux type "word"; every item in category 0 with
/// weight 1 and a single label (0, 0).
inline TypedGraph graph_from(const SideEdges& users, const SideEdges& items, std::uint32_t aux_count) {
  TypedGraph g;
  g.declare_type("user", users.nodes);
  g.declare_type("item", items.nodes);
  const NodeTypeId word = g.declare_type("word", aux_count);
  for (auto [n, a] : users.edges) g.add_aux_edge(Side::user, n, word, a);
  for (auto [n, a] : items.edges) g.add_aux_edge(Side::item, n, word, a);
  g.add_label(0, 0);
  for (std::uint32_t i = 0; i < items.nodes; ++i) g.set_category(i, 0, 1.0);
  g.finalize();
  return g;
}

/// Pairwise common-neighbor counts straight from the edge list: for every
/// i < j, the number of distinct aux nodes adjacent to both whose distinct
/// degree is below the threshold.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> brute_proximity(const SideEdges& s,
                                                                                      std::uint32_t threshold) {
  std::vector<std::set<std::uint32_t>> adj(s.nodes);
  std::vector<std::set<std::uint32_t>> members(s.aux);
  for (auto [n, a] : s.edges) {
    adj[n].insert(a);
    members[a].insert(n);
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> out;
  for (std::uint32_t i = 0; i < s.nodes; ++i)
    for (std::uint32_t j = i + 1; j < s.nodes; ++j) {
      std::uint32_t count = 0;
      for (auto a : adj[i])
        if (adj[j].count(a) && members[a].size() < threshold) ++count;
      if (count) out[{i, j}] = count;
    }
  return out;
}

template <class To, class From>
TowerParams<To> cast_tower(const TowerParams<From>& p) {
  TowerParams<To> out;
  out.spec = p.spec;
  auto copy = [](const std::vector<Tensor<From>>& src, std::vector<Tensor<To>>& dst) {
    for (const auto& t : src) dst.push_back(t.template cast<To>());
  };
  copy(p.filters, out.filters);
  copy(p.merges, out.merges);
  copy(p.bitwise, out.bitwise);
  copy(p.dense_w, out.dense_w);
  copy(p.dense_b, out.dense_b);
  copy(p.embeddings, out.embeddings);
  return out;
}

template <class To, class From>
ModelParams<To> cast_model(const ModelParams<From>& m) {
  return {cast_tower<To>(m.user), cast_tower<To>(m.item)};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("intentgc_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace intentgc::test
