#include "intentgc/sampling.hpp"

#include <algorithm>

namespace intentgc {

NegativeSampler::NegativeSampler(const TypedGraph& graph, std::uint32_t max_resample)
    : graph_(graph), max_resample_(max_resample) {
  members_.resize(graph.category_count());
  for (std::uint32_t i = 0; i < graph.item_count(); ++i)
    if (graph.item_weight(i) > 0) members_[graph.leaf_category(i)].push_back(i);
  dists_.resize(members_.size());
  for (std::size_t c = 0; c < members_.size(); ++c) {
    if (members_[c].size() < 2) continue;
    std::vector<double> w;
    w.reserve(members_[c].size());
    for (auto i : members_[c]) w.push_back(graph.item_weight(i));
    dists_[c] = std::discrete_distribution<std::uint32_t>(w.begin(), w.end());
  }
}

std::optional<std::uint32_t> NegativeSampler::sample(std::uint32_t user, std::uint32_t positive,
                                                     std::mt19937_64& rng) {
  const std::uint32_t cat = graph_.leaf_category(positive);
  const auto& items = members_[cat];
  if (items.size() < 2) {
    ++skipped_;
    return std::nullopt;
  }
  const auto& labeled = graph_.user_items(user);
  const bool exhausted = std::all_of(items.begin(), items.end(), [&](std::uint32_t i) {
    return std::binary_search(labeled.begin(), labeled.end(), i);
  });
  if (!exhausted) {
    for (std::uint32_t attempt = 0; attempt <= max_resample_; ++attempt) {
      const std::uint32_t item = items[dists_[cat](rng)];
      if (!std::binary_search(labeled.begin(), labeled.end(), item)) return item;
    }
  }
  ++skipped_;
  return std::nullopt;
}

}  // namespace intentgc
