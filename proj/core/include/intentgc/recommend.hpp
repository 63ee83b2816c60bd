#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intentgc/ann.hpp"
#include "intentgc/config.hpp"
#include "intentgc/eval.hpp"

namespace intentgc {

enum class KnnMethod { exact, approximate };

KnnMethod parse_knn_method(const std::string& name);
std::string to_string(KnnMethod method);

struct KnnOptions {
  KnnMethod method = KnnMethod::exact;
  std::uint32_t k = 10;
  AnnOptions ann;

  /// Reads knn_method and knn_k; the ANN seed follows `seed`.
  static KnnOptions from(const Config& config);
};

/// Top-k items for every user, in ranking order.
std::vector<std::vector<ScoredItem>> recommend(const EmbeddingStore& users, const EmbeddingStore& items,
                                               const KnnOptions& options);

/// `#method`, `#k`, `#fingerprint` headers, then `userId<TAB>itemId:score,...`.
std::string format_recommendations(const std::vector<std::vector<ScoredItem>>& lists, const NodeNames& users,
                                   const NodeNames& items, const KnnOptions& options,
                                   const std::string& fingerprint);

}  // namespace intentgc
