#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "intentgc/graph.hpp"

namespace intentgc {

/// Draws negatives for (user, positive) from the positive's leaf category,
/// proportionally to item weight, rejecting items the user already labeled.
class NegativeSampler {
 public:
  explicit NegativeSampler(const TypedGraph& graph, std::uint32_t max_resample = 50);

  /// nullopt when the category has fewer than two weighted items, when every
  /// candidate is labeled by the user, or when max_resample draws all hit
  /// labeled items. Each nullopt increments skipped().
  std::optional<std::uint32_t> sample(std::uint32_t user, std::uint32_t positive, std::mt19937_64& rng);

  std::uint64_t skipped() const noexcept { return skipped_; }
  /// Items of `category` with positive weight, ascending.
  const std::vector<std::uint32_t>& candidates(std::uint32_t category) const { return members_.at(category); }

 private:
  const TypedGraph& graph_;
  std::uint32_t max_resample_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::vector<std::discrete_distribution<std::uint32_t>> dists_;
  std::uint64_t skipped_ = 0;
};

}  // namespace intentgc
