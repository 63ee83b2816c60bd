#include "intentgc/synthetic.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "intentgc/error.hpp"

namespace intentgc {

SyntheticSpec SyntheticSpec::from(const Config& c) {
  SyntheticSpec s;
  auto u32 = [&](const char* key, std::uint32_t fallback) {
    const auto v = c.get_u64(key, fallback);
    if (v > 0xffffffffULL) throw ConfigError(std::string(key) + " is too large");
    return static_cast<std::uint32_t>(v);
  };
  s.users = u32("gen.users", s.users);
  s.items = u32("gen.items", s.items);
  s.user_blocks = u32("gen.user_blocks", s.user_blocks);
  s.item_blocks = u32("gen.item_blocks", s.item_blocks);
  s.aux_types = u32("gen.aux_types", s.aux_types);
  s.aux_per_type = u32("gen.aux_per_type", s.aux_per_type);
  s.aux_links = u32("gen.aux_links", s.aux_links);
  s.noise = c.get_double("gen.noise", s.noise);
  s.aux_noise = c.get_double("gen.aux_noise", s.aux_noise);
  s.labels_per_user = u32("gen.labels_per_user", s.labels_per_user);
  s.categories = u32("gen.categories", s.categories);
  s.feature_width = u32("gen.feature_width", s.feature_width);
  s.signal = c.get_double("gen.signal", s.signal);
  s.seed = c.get_u64("seed", s.seed);
  s.validate();
  return s;
}

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("synthetic: " + what);
  };
  require(user_blocks >= 1 && item_blocks >= 1, "block counts must be >= 1");
  require(users >= user_blocks && items >= item_blocks, "every block needs a node");
  require(items >= 2 * item_blocks, "every item block needs two items");
  require(aux_per_type >= item_blocks, "every block needs an aux node");
  require(noise >= 0 && noise <= 1 && aux_noise >= 0 && aux_noise <= 1, "noise rates must be in [0, 1]");
  require(labels_per_user >= 1 && labels_per_user <= items / item_blocks, "labels_per_user must fit in a block");
  require(aux_links >= 1 && aux_links <= aux_per_type / item_blocks, "aux_links must fit in a block");
  require(categories >= 1 && items >= 2 * categories, "every category needs two items");
  require(signal >= 0, "signal must be >= 0");
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

std::uint32_t block_of(std::uint32_t index, std::uint32_t count, std::uint32_t blocks) {
  return static_cast<std::uint32_t>(std::uint64_t{index} * blocks / count);
}

std::string aux_type_name(std::uint32_t t) {
  static const char* names[] = {"word", "shop", "brand", "scene"};
  return t < 4 ? names[t] : "aux" + std::to_string(t);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  TypedGraph& g = out.graph;
  g.declare_type("user", spec.users);
  g.declare_type("item", spec.items);
  for (std::uint32_t u = 0; u < spec.users; ++u) g.names(kUserType).bind("u" + std::to_string(u), u);
  for (std::uint32_t i = 0; i < spec.items; ++i) g.names(kItemType).bind("i" + std::to_string(i), i);

  out.user_block.resize(spec.users);
  out.item_block.resize(spec.items);
  for (std::uint32_t u = 0; u < spec.users; ++u) out.user_block[u] = block_of(u, spec.users, spec.user_blocks);
  for (std::uint32_t i = 0; i < spec.items; ++i) out.item_block[i] = block_of(i, spec.items, spec.item_blocks);
  std::vector<std::vector<std::uint32_t>> block_items(spec.item_blocks);
  for (std::uint32_t i = 0; i < spec.items; ++i) block_items[out.item_block[i]].push_back(i);

  // labels
  {
    auto rng = stream(spec.seed, 1);
    std::bernoulli_distribution leave(spec.noise);
    std::vector<std::uint32_t> others;
    for (std::uint32_t u = 0; u < spec.users; ++u) {
      const std::uint32_t home = spec.target_block(out.user_block[u]);
      others.clear();
      for (std::uint32_t i = 0; i < spec.items; ++i)
        if (out.item_block[i] != home) others.push_back(i);
      std::vector<std::uint32_t> chosen;
      while (chosen.size() < spec.labels_per_user) {
        const bool away = !others.empty() && leave(rng);
        const auto& pool = away ? others : block_items[home];
        const std::uint32_t item = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        if (std::find(chosen.begin(), chosen.end(), item) == chosen.end()) chosen.push_back(item);
      }
      for (auto i : chosen) g.add_label(u, i);
    }
  }

  // categories and popularity weights, independent of the blocks
  {
    auto rng = stream(spec.seed, 2);
    std::vector<std::uint32_t> perm(spec.items);
    for (std::uint32_t i = 0; i < spec.items; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_int_distribution<int> weight(1, 10);
    for (std::uint32_t c = 0; c < spec.categories; ++c) g.category_names().bind("c" + std::to_string(c), c);
    std::vector<double> w(spec.items);
    for (std::uint32_t i = 0; i < spec.items; ++i) w[i] = weight(rng);
    for (std::uint32_t p = 0; p < spec.items; ++p) g.set_category(perm[p], p % spec.categories, w[perm[p]]);
  }

  // aux memberships, one stream per type
  for (std::uint32_t t = 0; t < spec.aux_types; ++t) {
    const NodeTypeId type = g.declare_type(aux_type_name(t), spec.aux_per_type);
    for (std::uint32_t a = 0; a < spec.aux_per_type; ++a)
      g.names(type).bind(aux_type_name(t).substr(0, 1) + std::to_string(t) + "_" + std::to_string(a), a);
    std::vector<std::vector<std::uint32_t>> block_aux(spec.item_blocks);
    for (std::uint32_t a = 0; a < spec.aux_per_type; ++a)
      block_aux[block_of(a, spec.aux_per_type, spec.item_blocks)].push_back(a);
    auto rng = stream(spec.seed, 100 + t);
    std::bernoulli_distribution leave(spec.aux_noise);
    std::uniform_int_distribution<std::uint32_t> any(0, spec.aux_per_type - 1);
    auto link = [&](Side side, std::uint32_t node, std::uint32_t block) {
      const auto& own = block_aux[block];
      for (std::uint32_t k = 0; k < spec.aux_links; ++k) {
        const std::uint32_t a =
            leave(rng) ? any(rng) : own[std::uniform_int_distribution<std::size_t>(0, own.size() - 1)(rng)];
        g.add_aux_edge(side, node, type, a);
      }
    };
    for (std::uint32_t u = 0; u < spec.users; ++u) link(Side::user, u, spec.target_block(out.user_block[u]));
    for (std::uint32_t i = 0; i < spec.items; ++i) link(Side::item, i, out.item_block[i]);
  }
  g.finalize();

  for (std::uint32_t u = 0; u < spec.users; ++u)
    for (auto i : block_items[spec.target_block(out.user_block[u])])
      if (!g.has_label(u, i)) out.test.emplace_back(u, i);

  // features: a noisy block direction plus two uninformative discrete fields
  {
    auto rng = stream(spec.seed, 3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> tag(1, 7), term(1, 15), terms(1, 3);
    FeatureSchema& schema = out.features.schema;
    for (Side side : {Side::user, Side::item}) {
      auto& fields = schema.fields(side);
      fields.push_back({"profile", FieldKind::continuous, spec.feature_width, 0, 0});
      fields.push_back({"tag", FieldKind::discrete_single, 1, 8, 4});
      fields.push_back({"terms", FieldKind::discrete_multi, 1, 16, 4});
    }
    for (Side side : {Side::user, Side::item}) {
      const std::uint32_t n = side == Side::user ? spec.users : spec.items;
      auto& records = side == Side::user ? out.features.features.users : out.features.features.items;
      records.resize(n);
      for (std::uint32_t v = 0; v < n; ++v) {
        const std::uint32_t block =
            side == Side::user ? spec.target_block(out.user_block[v]) : out.item_block[v];
        RawRecord& rec = records[v];
        rec.fields.resize(3);
        auto& x = rec.fields[0].continuous;
        for (std::uint32_t d = 0; d < spec.feature_width; ++d)
          x.push_back((d % spec.item_blocks == block ? spec.signal : 0.0) + gauss(rng));
        rec.fields[1].ids.push_back(tag(rng));
        const std::uint32_t count = terms(rng);
        for (std::uint32_t k = 0; k < count; ++k) rec.fields[2].ids.push_back(term(rng));
      }
    }
  }
  return out;
}

std::string format_pairs(const std::vector<LabeledEdge>& pairs, const TypedGraph& graph) {
  std::ostringstream out;
  for (const auto& [u, i] : pairs) out << graph.names(kUserType).name(u) << '\t' << graph.names(kItemType).name(i) << '\n';
  return out.str();
}

SyntheticPaths SyntheticPaths::in(const std::filesystem::path& dir) {
  return {dir / "graph.txt", dir / "features.txt", dir / "test.txt", dir / "dictionary.txt"};
}

void write_synthetic(const SyntheticData& data, const SyntheticPaths& paths) {
  write_graph(data.graph, paths.graph);
  write_text_file(paths.features, format_features(data.features.schema, data.features.features, data.graph));
  write_text_file(paths.test, format_pairs(data.test, data.graph));
  write_dictionary(data.graph, paths.dictionary);
}

}  // namespace intentgc
