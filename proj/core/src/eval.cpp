#include "intentgc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

template <class Real>
EmbeddingStore infer_all(const ModelParams<Real>& model, Side side, const TranslatedGraph& graph,
                         const RawFeatures& features, std::size_t chunk) {
  const TowerParams<Real>& tower = model.tower(side);
  const std::uint32_t n = graph.node_count(side);
  EmbeddingStore store;
  store.side = side;
  store.z = Tensor<double>(n, tower.spec.output_width());
  if (chunk == 0) chunk = 1;
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t begin = 0; begin < n; begin += static_cast<std::uint32_t>(chunk)) {
    const std::uint32_t end = static_cast<std::uint32_t>(std::min<std::size_t>(n, begin + chunk));
    nodes.resize(end - begin);
    std::iota(nodes.begin(), nodes.end(), begin);
    const Tensor<Real> z = tower_embed(tower, nodes, graph, features.records(side));
    for (std::uint32_t r = 0; r < nodes.size(); ++r) {
      auto src = z.row(r);
      auto dst = store.z.row(begin + r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = static_cast<double>(src[c]);
    }
  }
  return store;
}

std::string format_embeddings(const EmbeddingStore& store, const NodeNames& names, const std::string& fingerprint) {
  std::ostringstream out;
  out << "#side " << to_string(store.side) << '\n'
      << "#fingerprint " << fingerprint << '\n'
      << "#width " << store.width() << '\n';
  for (std::size_t r = 0; r < store.size(); ++r) {
    out << names.name(static_cast<std::uint32_t>(r)) << '\t';
    auto row = store.z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << text::format_double(row[c]);
    out << '\n';
  }
  return out.str();
}

EmbeddingFile parse_embeddings(const std::string& content, const NodeNames& names, const std::string& source) {
  EmbeddingFile f;
  std::istringstream in(content);
  std::string raw;
  std::size_t lineno = 0, width = 0;
  bool have_width = false;
  std::vector<bool> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto parts = text::split(line, ' ', true);
      if (parts.size() != 2) throw ParseError(source, lineno, "malformed header");
      if (parts[0] == "#side") {
        f.store.side = parse_side(parts[1]);
      } else if (parts[0] == "#fingerprint") {
        f.fingerprint = parts[1];
      } else if (parts[0] == "#width") {
        auto w = text::parse_u64(parts[1]);
        if (!w) throw ParseError(source, lineno, "bad width");
        width = *w;
        have_width = true;
        f.store.z = Tensor<double>(names.size(), width);
        seen.assign(names.size(), false);
      } else {
        throw ParseError(source, lineno, "unknown header '" + parts[0] + "'");
      }
      continue;
    }
    if (!have_width) throw ParseError(source, lineno, "#width must precede rows");
    const auto cols = text::split(line, '\t', false);
    if (cols.size() != 2) throw ParseError(source, lineno, "expected 'nodeId<TAB>values'");
    auto idx = names.find(cols[0]);
    if (!idx) throw IndexOutOfRange(source + ":" + std::to_string(lineno) + ": unknown node '" + cols[0] + "'");
    const auto values = text::split(cols[1], ',', false);
    if (values.size() != width) throw ParseError(source, lineno, "row width differs from #width");
    for (std::size_t c = 0; c < width; ++c) {
      auto v = text::parse_double(values[c]);
      if (!v) throw ParseError(source, lineno, "bad value '" + values[c] + "'");
      if (!std::isfinite(*v)) throw NumericError(source + ":" + std::to_string(lineno) + ": non-finite embedding");
      f.store.z(*idx, c) = *v;
    }
    seen[*idx] = true;
  }
  for (bool s : seen)
    if (!s) throw SchemaMismatch(source + ": embedding rows missing for some nodes");
  return f;
}

double inner_product(std::span<const double> a, std::span<const double> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace {
std::vector<double> all_scores(std::span<const double> query, const Tensor<double>& items) {
  require_shape(query.size() == items.cols(), "query width differs from item width");
  std::vector<double> s(items.rows());
  for (std::size_t i = 0; i < items.rows(); ++i) s[i] = inner_product(query, items.row(i));
  return s;
}

std::uint64_t rank_in(const std::vector<double>& scores, std::uint32_t item) {
  const double si = scores[item];
  std::uint64_t better = 0;
  for (std::uint32_t j = 0; j < scores.size(); ++j)
    if (scores[j] > si || (scores[j] == si && j < item)) ++better;
  return better + 1;
}
}  // namespace

std::vector<ScoredItem> knn_exact(std::span<const double> query, const Tensor<double>& items, std::size_t k) {
  const auto scores = all_scores(query, items);
  std::vector<ScoredItem> all(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i) all[i] = {i, scores[i]};
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

std::uint64_t rank_of(std::span<const double> query, const Tensor<double>& items, std::uint32_t item) {
  if (item >= items.rows()) throw IndexOutOfRange("item " + std::to_string(item));
  return rank_in(all_scores(query, items), item);
}

double auc(std::span<const std::pair<double, bool>> scored) {
  std::vector<std::pair<double, bool>> v(scored.begin(), scored.end());
  for (const auto& [s, label] : v)
    if (!std::isfinite(s)) throw NumericError("auc: non-finite score");
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos = 0, neg = 0, wins = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    double p = 0, n = 0;
    while (j < v.size() && v[j].first == v[i].first) {
      (v[j].second ? p : n) += 1;
      ++j;
    }
    wins += p * neg + 0.5 * p * n;
    pos += p;
    neg += n;
    i = j;
  }
  if (pos == 0 || neg == 0) throw Error("auc needs at least one positive and one negative");
  return wins / (pos * neg);
}

double scaled_mrr(std::span<const std::uint64_t> ranks) {
  if (ranks.empty()) throw Error("scaled_mrr of an empty evaluation set");
  double sum = 0;
  for (auto r : ranks) {
    if (r == 0) throw Error("ranks are 1-based");
    sum += 1.0 / static_cast<double>((r + 99) / 100);
  }
  return sum / static_cast<double>(ranks.size());
}

std::vector<LabeledEdge> parse_pairs(const std::string& content, const NodeNames& users, const NodeNames& items,
                                     const std::string& source) {
  std::vector<LabeledEdge> out;
  std::istringstream in(content);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t', false);
    if (cols.size() != 2) throw ParseError(source, lineno, "expected 'userId<TAB>itemId'");
    auto u = users.find(cols[0]);
    auto i = items.find(cols[1]);
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (!u) throw IndexOutOfRange(where + "unknown user '" + cols[0] + "'");
    if (!i) throw IndexOutOfRange(where + "unknown item '" + cols[1] + "'");
    out.emplace_back(*u, *i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<LabeledEdge> load_pairs(const std::filesystem::path& path, const NodeNames& users,
                                    const NodeNames& items) {
  return parse_pairs(read_text_file(path), users, items, path.string());
}

EvalReport evaluate(std::span<const LabeledEdge> test, std::span<const LabeledEdge> train_labels,
                    const EmbeddingStore& users, const EmbeddingStore& items, const EvalOptions& options) {
  if (test.empty()) throw Error("empty evaluation set");
  require_shape(users.width() == items.width(), "user and item embeddings differ in width");
  const std::uint32_t n_items = static_cast<std::uint32_t>(items.size());

  std::vector<LabeledEdge> sorted_test(test.begin(), test.end());
  std::sort(sorted_test.begin(), sorted_test.end());
  std::vector<LabeledEdge> known(train_labels.begin(), train_labels.end());
  known.insert(known.end(), sorted_test.begin(), sorted_test.end());
  std::sort(known.begin(), known.end());
  known.erase(std::unique(known.begin(), known.end()), known.end());

  EvalReport report;
  report.test_pairs = sorted_test.size();
  std::mt19937_64 rng(options.seed);
  std::vector<std::pair<double, bool>> scored;
  std::vector<std::uint64_t> ranks;
  std::vector<std::uint32_t> candidates;

  for (std::size_t a = 0; a < sorted_test.size();) {
    const std::uint32_t u = sorted_test[a].first;
    std::size_t b = a;
    while (b < sorted_test.size() && sorted_test[b].first == u) ++b;
    if (u >= users.size()) throw IndexOutOfRange("test user " + std::to_string(u));
    ++report.test_users;
    const auto scores = all_scores(users.z.row(u), items.z);

    for (std::size_t p = a; p < b; ++p) {
      const std::uint32_t item = sorted_test[p].second;
      if (item >= n_items) throw IndexOutOfRange("test item " + std::to_string(item));
      if (options.compute_auc) scored.emplace_back(scores[item], true);
      if (options.compute_mrr) ranks.push_back(rank_in(scores, item));
    }
    if (options.compute_auc) {
      const auto lo = std::lower_bound(known.begin(), known.end(), LabeledEdge{u, 0});
      const auto hi = std::lower_bound(known.begin(), known.end(), LabeledEdge{u + 1, 0});
      candidates.clear();
      auto k = lo;
      for (std::uint32_t i = 0; i < n_items; ++i) {
        while (k != hi && k->second < i) ++k;
        if (k != hi && k->second == i) continue;
        candidates.push_back(i);
      }
      const std::size_t take = std::min<std::size_t>(options.neg_per_user, candidates.size());
      for (std::size_t t = 0; t < take; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, candidates.size() - 1);
        std::swap(candidates[t], candidates[pick(rng)]);
        scored.emplace_back(scores[candidates[t]], false);
      }
      report.scored_negatives += take;
    }
    a = b;
  }
  if (options.compute_auc) {
    report.auc = auc(scored);
    report.has_auc = true;
  }
  if (options.compute_mrr) {
    report.mrr = scaled_mrr(ranks);
    report.has_mrr = true;
  }
  return report;
}

std::string format_report(const EvalReport& report, const EvalOptions& options, const std::string& fingerprint) {
  std::ostringstream out;
  out << "fingerprint " << fingerprint << '\n'
      << "auc_candidates pooled; per test user " << options.neg_per_user
      << " uniform negatives without replacement from items unlabeled in train and test\n"
      << "test_pairs " << report.test_pairs << '\n'
      << "test_users " << report.test_users << '\n'
      << "scored_negatives " << report.scored_negatives << '\n';
  if (report.has_auc) out << "auc " << text::format_fixed(report.auc, 6) << '\n';
  if (report.has_mrr) out << "mrr " << text::format_fixed(report.mrr, 6) << '\n';
  return out.str();
}

template EmbeddingStore infer_all(const ModelParams<float>&, Side, const TranslatedGraph&, const RawFeatures&,
                                  std::size_t);
template EmbeddingStore infer_all(const ModelParams<double>&, Side, const TranslatedGraph&, const RawFeatures&,
                                  std::size_t);

}  // namespace intentgc
