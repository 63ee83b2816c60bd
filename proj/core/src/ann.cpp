#include "intentgc/ann.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "intentgc/error.hpp"

namespace intentgc {

ApproxIndex::ApproxIndex(const Tensor<double>& items, const AnnOptions& options) : items_(items), options_(options) {
  if (options.tables < 1 || options.bits < 1 || options.bits > 24)
    throw ConfigError("ann: need tables >= 1 and 1 <= bits <= 24");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t buckets = std::size_t{1} << options.bits;
  for (std::uint32_t t = 0; t < options.tables; ++t) {
    Tensor<double> planes(options.bits, items.cols());
    for (auto& v : planes.values()) v = gauss(rng);
    planes_.push_back(std::move(planes));

    std::vector<std::uint32_t> codes(items.rows());
    std::vector<std::uint32_t> offsets(buckets + 1, 0);
    for (std::uint32_t i = 0; i < items.rows(); ++i) {
      codes[i] = code(t, items.row(i), nullptr);
      ++offsets[codes[i] + 1];
    }
    for (std::size_t b = 0; b < buckets; ++b) offsets[b + 1] += offsets[b];
    std::vector<std::uint32_t> members(items.rows());
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t i = 0; i < items.rows(); ++i) members[fill[codes[i]]++] = i;
    offsets_.push_back(std::move(offsets));
    members_.push_back(std::move(members));
  }
}

std::uint32_t ApproxIndex::code(std::uint32_t table, std::span<const double> v, std::vector<double>* margins) const {
  const Tensor<double>& planes = planes_[table];
  std::uint32_t c = 0;
  if (margins) margins->resize(options_.bits);
  for (std::uint32_t b = 0; b < options_.bits; ++b) {
    const double p = inner_product(planes.row(b), v);
    if (p >= 0) c |= 1u << b;
    if (margins) (*margins)[b] = std::abs(p);
  }
  return c;
}

std::vector<ScoredItem> ApproxIndex::query(std::span<const double> q, std::size_t k) const {
  require_shape(q.size() == items_.cols(), "ann query width");
  std::vector<char> seen(items_.rows(), 0);
  std::vector<std::uint32_t> candidates;
  std::vector<double> margins;
  std::vector<std::uint32_t> order(options_.bits);

  // a perturbation is a sorted set of positions into `order`; cost = sum of squared margins
  using Set = std::vector<std::uint32_t>;
  using Entry = std::pair<double, Set>;
  auto cmp = [](const Entry& a, const Entry& b) { return a.first > b.first; };

  for (std::uint32_t t = 0; t < options_.tables; ++t) {
    const std::uint32_t home = code(t, q, &margins);
    for (std::uint32_t b = 0; b < options_.bits; ++b) order[b] = b;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return margins[a] != margins[b] ? margins[a] < margins[b] : a < b;
    });
    auto cost = [&](std::uint32_t pos) { return margins[order[pos]] * margins[order[pos]]; };

    auto visit = [&](std::uint32_t bucket) {
      for (auto i = offsets_[t][bucket]; i < offsets_[t][bucket + 1]; ++i) {
        const std::uint32_t item = members_[t][i];
        if (!seen[item]) {
          seen[item] = 1;
          candidates.push_back(item);
        }
      }
    };
    visit(home);
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    heap.push({cost(0), Set{0}});
    for (std::uint32_t probe = 1; probe < options_.probes && !heap.empty(); ++probe) {
      auto [score, set] = heap.top();
      heap.pop();
      std::uint32_t bucket = home;
      for (auto pos : set) bucket ^= 1u << order[pos];
      visit(bucket);
      const std::uint32_t last = set.back();
      if (last + 1 < options_.bits) {
        Set shifted = set;
        shifted.back() = last + 1;
        heap.push({score - cost(last) + cost(last + 1), std::move(shifted)});
        Set expanded = set;
        expanded.push_back(last + 1);
        heap.push({score + cost(last + 1), std::move(expanded)});
      }
    }
  }

  last_candidates_ = candidates.size();
  std::vector<ScoredItem> scored;
  scored.reserve(candidates.size());
  for (auto i : candidates) scored.push_back({i, inner_product(q, items_.row(i))});
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), ranks_before);
  scored.resize(k);
  return scored;
}

}  // namespace intentgc
