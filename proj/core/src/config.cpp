#include "intentgc/config.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>
#include <string_view>

#include "intentgc/error.hpp"
#include "intentgc/graph.hpp"
#include "text_util.hpp"

namespace intentgc {

namespace {

constexpr std::string_view kKeys[] = {
    // translate
    "rho", "hot_threshold", "aux_types",
    // model + train
    "learning_rate", "momentum", "batch_size", "margin", "q", "L", "negatives_per_edge", "epochs",
    "init_std_network", "init_std_embedding", "precision", "mode", "conv_activation", "dense_activation",
    "dense_widths", "weighted_aggregation", "seed", "threads", "max_resample", "checkpoint_every", "eval_every",
    "early_stop_patience",
    // eval
    "neg_per_user", "metrics", "knn_method", "knn_k",
    // synthetic data
    "gen.users", "gen.items", "gen.user_blocks", "gen.item_blocks", "gen.aux_types", "gen.aux_per_type",
    "gen.aux_links", "gen.noise", "gen.aux_noise", "gen.labels_per_user", "gen.categories",
    "gen.feature_width", "gen.signal",
    // benchmark
    "bench.m", "bench.reps", "bench.nodes", "bench.warmup"};

}  // namespace

bool is_known_config_key(const std::string& key) {
  if (key.starts_with("hot_threshold.") && key.size() > 14) return true;
  return std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys);
}

Config Config::parse(const std::string& content, const std::string& source) {
  Config c;
  std::istringstream in(content);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    const std::string line = text::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = text::trim(line.substr(0, eq));
    const std::string value = text::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + "expected 'key = value'");
    if (!is_known_config_key(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (c.values_.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_text_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse(content, path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known_config_key(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = text::parse_u64(it->second);
  if (!v) throw ConfigError(key + ": expected a non-negative integer, got '" + it->second + "'");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = text::parse_double(it->second);
  if (!v || !std::isfinite(*v)) throw ConfigError(key + ": expected a finite number, got '" + it->second + "'");
  return *v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError(key + ": expected true|false, got '" + v + "'");
}

std::vector<std::uint32_t> Config::get_u32_list(const std::string& key,
                                                const std::vector<std::uint32_t>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::uint32_t> out;
  for (const auto& part : text::split(it->second, ',', false)) {
    auto v = text::parse_u64(text::trim(part));
    if (!v || *v > 0xffffffffULL) throw ConfigError(key + ": expected a comma-separated list of integers");
    out.push_back(static_cast<std::uint32_t>(*v));
  }
  return out;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = values_.find(key);
  if (it == values_.end()) return out;
  for (const auto& part : text::split(it->second, ',', false)) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string Config::normalized() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string Config::fingerprint() const { return text::hex64(text::fnv1a(normalized())); }

}  // namespace intentgc
