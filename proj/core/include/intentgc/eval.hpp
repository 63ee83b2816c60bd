#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intentgc/features.hpp"
#include "intentgc/intentnet.hpp"
#include "intentgc/translate.hpp"

namespace intentgc {

/// One embedding row per node of a side.
struct EmbeddingStore {
  Side side = Side::user;
  Tensor<double> z;

  std::size_t size() const noexcept { return z.rows(); }
  std::size_t width() const noexcept { return z.cols(); }
};

/// tower_forward over every node of `side`, in chunks of `chunk` nodes.
template <class Real>
EmbeddingStore infer_all(const ModelParams<Real>& model, Side side, const TranslatedGraph& graph,
                         const RawFeatures& features, std::size_t chunk = 256);

/// `#side`/`#fingerprint` headers, then `nodeId<TAB>v1,v2,...` lines.
std::string format_embeddings(const EmbeddingStore& store, const NodeNames& names, const std::string& fingerprint);
struct EmbeddingFile {
  EmbeddingStore store;
  std::string fingerprint;
};
EmbeddingFile parse_embeddings(const std::string& text, const NodeNames& names,
                               const std::string& source = "<embeddings>");

double inner_product(std::span<const double> a, std::span<const double> b);

struct ScoredItem {
  std::uint32_t item = 0;
  double score = 0;
};

/// Ranking order: descending score, then ascending item index.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  return a.score != b.score ? a.score > b.score : a.item < b.item;
}

/// Exact top-K by inner product. K above the item count returns every item.
std::vector<ScoredItem> knn_exact(std::span<const double> query, const Tensor<double>& items, std::size_t k);

/// 1-based position of `item` in the full exact ranking for `query`.
std::uint64_t rank_of(std::span<const double> query, const Tensor<double>& items, std::uint32_t item);

/// Mann-Whitney AUC, ties count one half. Throws if a class is missing.
double auc(std::span<const std::pair<double, bool>> scored);

/// mean of 1 / ceil(rank / 100).
double scaled_mrr(std::span<const std::uint64_t> ranks);

/// `userId<TAB>itemId` lines.
std::vector<LabeledEdge> load_pairs(const std::filesystem::path& path, const NodeNames& users, const NodeNames& items);
std::vector<LabeledEdge> parse_pairs(const std::string& text, const NodeNames& users, const NodeNames& items,
                                     const std::string& source = "<pairs>");

struct EvalOptions {
  bool compute_auc = true;
  bool compute_mrr = true;
  std::uint32_t neg_per_user = 100;
  std::uint64_t seed = 1;
};

struct EvalReport {
  std::size_t test_pairs = 0;
  std::size_t test_users = 0;
  std::size_t scored_negatives = 0;
  double auc = 0;
  double mrr = 0;
  bool has_auc = false;
  bool has_mrr = false;
};

/// AUC pools every test positive and every sampled negative into one scored
/// list. Negatives per test user are drawn uniformly without replacement from
/// items that are positive for the user in neither `train_labels` nor `test`.
/// MRR ranks each test item among all items.
EvalReport evaluate(std::span<const LabeledEdge> test, std::span<const LabeledEdge> train_labels,
                    const EmbeddingStore& users, const EmbeddingStore& items, const EvalOptions& options);

std::string format_report(const EvalReport& report, const EvalOptions& options, const std::string& fingerprint);

}  // namespace intentgc
