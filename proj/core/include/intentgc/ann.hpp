#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "intentgc/eval.hpp"
#include "intentgc/tensor.hpp"

namespace intentgc {

struct AnnOptions {
  std::uint32_t tables = 32;
  std::uint32_t bits = 14;
  /// Buckets probed per table, in query-directed order.
  std::uint32_t probes = 256;
  std::uint64_t seed = 1;
};

/// Sign-random-projection bucketing with query-directed multi-probe. Candidates
/// from every probed bucket are re-ranked by exact inner product.
class ApproxIndex {
 public:
  ApproxIndex(const Tensor<double>& items, const AnnOptions& options = {});

  std::vector<ScoredItem> query(std::span<const double> q, std::size_t k) const;
  /// Distinct candidates scored by the last query().
  std::size_t last_candidates() const noexcept { return last_candidates_; }

 private:
  std::uint32_t code(std::uint32_t table, std::span<const double> v, std::vector<double>* margins) const;

  const Tensor<double>& items_;
  AnnOptions options_;
  std::vector<Tensor<double>> planes_;  ///< per table, bits x dim
  /// per table: bucket code -> items (2^bits buckets)
  std::vector<std::vector<std::uint32_t>> offsets_;
  std::vector<std::vector<std::uint32_t>> members_;
  mutable std::size_t last_candidates_ = 0;
};

}  // namespace intentgc
