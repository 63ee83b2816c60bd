#include "intentgc/recommend.hpp"

#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

KnnMethod parse_knn_method(const std::string& name) {
  if (name == "exact") return KnnMethod::exact;
  if (name == "approximate") return KnnMethod::approximate;
  throw ConfigError("unknown knn_method '" + name + "' (expected exact|approximate)");
}

std::string to_string(KnnMethod method) { return method == KnnMethod::exact ? "exact" : "approximate"; }

KnnOptions KnnOptions::from(const Config& config) {
  KnnOptions o;
  o.method = parse_knn_method(config.get_string("knn_method", to_string(o.method)));
  o.k = static_cast<std::uint32_t>(config.get_u64("knn_k", o.k));
  o.ann.seed = config.get_u64("seed", o.ann.seed);
  if (o.k < 1) throw ConfigError("knn_k must be >= 1");
  return o;
}

std::vector<std::vector<ScoredItem>> recommend(const EmbeddingStore& users, const EmbeddingStore& items,
                                               const KnnOptions& options) {
  if (users.width() != items.width())
    throw SchemaMismatch("user width " + std::to_string(users.width()) + " != item width " +
                         std::to_string(items.width()));
  std::vector<std::vector<ScoredItem>> out(users.size());
  if (options.method == KnnMethod::exact) {
    for (std::size_t u = 0; u < users.size(); ++u) out[u] = knn_exact(users.z.row(u), items.z, options.k);
  } else {
    const ApproxIndex index(items.z, options.ann);
    for (std::size_t u = 0; u < users.size(); ++u) out[u] = index.query(users.z.row(u), options.k);
  }
  return out;
}

std::string format_recommendations(const std::vector<std::vector<ScoredItem>>& lists, const NodeNames& users,
                                   const NodeNames& items, const KnnOptions& options,
                                   const std::string& fingerprint) {
  std::ostringstream out;
  out << "#method " << to_string(options.method) << "\n#k " << options.k << "\n#fingerprint " << fingerprint
      << '\n';
  for (std::size_t u = 0; u < lists.size(); ++u) {
    out << users.name(static_cast<std::uint32_t>(u)) << '\t';
    for (std::size_t i = 0; i < lists[u].size(); ++i)
      out << (i ? "," : "") << items.name(lists[u][i].item) << ':' << text::format_double(lists[u][i].score);
    out << '\n';
  }
  return out.str();
}

}  // namespace intentgc
