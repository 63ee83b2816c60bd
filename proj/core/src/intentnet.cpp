#include "intentgc/intentnet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

ConvMode parse_conv_mode(const std::string& name) {
  if (name == "vectorwise") return ConvMode::vectorwise;
  if (name == "bitwise") return ConvMode::bitwise;
  throw ConfigError("unknown mode '" + name + "' (expected vectorwise|bitwise)");
}

std::string to_string(ConvMode mode) { return mode == ConvMode::vectorwise ? "vectorwise" : "bitwise"; }

void TowerSpec::validate() const {
  if (L < 1) throw ConfigError("L must be >= 1");
  if (rho < 1) throw ConfigError("rho must be >= 1");
  if (dense_widths.empty()) throw ConfigError("dense widths must not be empty");
  for (auto w : dense_widths)
    if (w < 1) throw ConfigError("dense widths must be >= 1");
  if (!fields.empty()) {
    std::uint32_t total = 0;
    for (const auto& f : fields) total += f.encoded_width();
    if (total != width())
      throw SchemaMismatch(to_string(side) + " features encode to width " + std::to_string(total) +
                           " but the tower expects " + std::to_string(width()));
  }
}

std::string format_tower_spec(const TowerSpec& spec) {
  std::ostringstream out;
  out << "side " << to_string(spec.side) << '\n'
      << "mode " << to_string(spec.mode) << '\n'
      << "q " << spec.q << '\n'
      << "L " << spec.L << '\n'
      << "relations " << spec.relations << '\n'
      << "rho " << spec.rho << '\n'
      << "dense ";
  for (std::size_t i = 0; i < spec.dense_widths.size(); ++i) out << (i ? "," : "") << spec.dense_widths[i];
  out << '\n'
      << "conv_act " << to_string(spec.conv_act) << '\n'
      << "dense_act " << to_string(spec.dense_act) << '\n'
      << "weighted_aggregation " << (spec.weighted_aggregation ? 1 : 0) << '\n';
  for (const auto& f : spec.fields) {
    out << "field " << f.name << ' ';
    switch (f.kind) {
      case FieldKind::continuous:
        out << "continuous " << f.width;
        break;
      case FieldKind::discrete_single:
        out << "discrete " << f.vocab_size << ' ' << f.embed_dim;
        break;
      case FieldKind::discrete_multi:
        out << "multi " << f.vocab_size << ' ' << f.embed_dim;
        break;
    }
    out << '\n';
  }
  return out.str();
}

TowerSpec parse_tower_spec(const std::string& content) {
  TowerSpec spec;
  spec.dense_widths.clear();
  std::istringstream in(content);
  std::string line;
  auto bad = [&](const std::string& what) { return SchemaMismatch("tower spec: " + what + " in '" + line + "'"); };
  auto num = [&](const std::string& s) {
    auto v = text::parse_u64(s);
    if (!v) throw bad("expected a non-negative integer");
    return static_cast<std::uint32_t>(*v);
  };
  while (std::getline(in, line)) {
    const auto parts = text::split(text::trim(line), ' ', true);
    if (parts.empty() || parts[0].empty()) continue;
    const auto& key = parts[0];
    if (key == "field") {
      if (parts.size() < 4) throw bad("short field line");
      FeatureField f;
      f.name = parts[1];
      if (parts[2] == "continuous" && parts.size() == 4) {
        f.width = num(parts[3]);
      } else if ((parts[2] == "discrete" || parts[2] == "multi") && parts.size() == 5) {
        f.kind = parts[2] == "discrete" ? FieldKind::discrete_single : FieldKind::discrete_multi;
        f.vocab_size = num(parts[3]);
        f.embed_dim = num(parts[4]);
      } else {
        throw bad("malformed field");
      }
      spec.fields.push_back(f);
      continue;
    }
    if (parts.size() != 2) throw bad("expected 'key value'");
    const auto& v = parts[1];
    if (key == "side") spec.side = parse_side(v);
    else if (key == "mode") spec.mode = parse_conv_mode(v);
    else if (key == "q") spec.q = num(v);
    else if (key == "L") spec.L = num(v);
    else if (key == "relations") spec.relations = num(v);
    else if (key == "rho") spec.rho = num(v);
    else if (key == "dense")
      for (const auto& w : text::split(v, ',', false)) spec.dense_widths.push_back(num(w));
    else if (key == "conv_act") spec.conv_act = parse_activation(v);
    else if (key == "dense_act") spec.dense_act = parse_activation(v);
    else if (key == "weighted_aggregation") spec.weighted_aggregation = num(v) != 0;
    else throw bad("unknown key");
  }
  spec.validate();
  return spec;
}

template <class Real>
TowerParams<Real> TowerParams<Real>::zeros(const TowerSpec& spec) {
  spec.validate();
  TowerParams p;
  p.spec = spec;
  const std::size_t m = spec.width();
  for (std::uint32_t k = 0; k < spec.conv_layers(); ++k) {
    if (spec.mode == ConvMode::vectorwise) {
      p.filters.emplace_back(spec.L, spec.relations + 1);
      p.merges.emplace_back(1, spec.L);
    } else {
      p.bitwise.emplace_back(m, 2 * m);
    }
  }
  for (std::size_t i = 0; i + 1 < spec.dense_widths.size(); ++i) {
    p.dense_w.emplace_back(spec.dense_widths[i], spec.dense_widths[i + 1]);
    p.dense_b.emplace_back(1, spec.dense_widths[i + 1]);
  }
  for (const auto& f : spec.fields)
    if (f.discrete()) p.embeddings.emplace_back(f.vocab_size, f.embed_dim);
  return p;
}

template <class Real>
TowerParams<Real> TowerParams<Real>::random(const TowerSpec& spec, std::mt19937_64& rng, double network_std,
                                            double embedding_std) {
  TowerParams p = zeros(spec);
  std::normal_distribution<double> gauss(0.0, 1.0);
  p.for_each([&](const std::string& name, T& t) {
    if (name.ends_with(".bias")) return;
    const double sd = name.starts_with("embed.") ? embedding_std : network_std;
    for (auto& v : t.values()) v = static_cast<Real>(sd * gauss(rng));
  });
  return p;
}

template <class Real>
void TowerParams<Real>::for_each(const std::function<void(const std::string&, T&)>& f) {
  for (std::size_t k = 0; k < filters.size(); ++k) {
    f("conv" + std::to_string(k) + ".filter", filters[k]);
    f("conv" + std::to_string(k) + ".merge", merges[k]);
  }
  for (std::size_t k = 0; k < bitwise.size(); ++k) f("conv" + std::to_string(k) + ".bitwise", bitwise[k]);
  for (std::size_t k = 0; k < dense_w.size(); ++k) {
    f("dense" + std::to_string(k) + ".weight", dense_w[k]);
    f("dense" + std::to_string(k) + ".bias", dense_b[k]);
  }
  std::size_t e = 0;
  for (const auto& field : spec.fields)
    if (field.discrete()) f("embed." + field.name, embeddings[e++]);
}

template <class Real>
void TowerParams<Real>::for_each(const std::function<void(const std::string&, const T&)>& f) const {
  const_cast<TowerParams*>(this)->for_each([&](const std::string& name, T& t) { f(name, t); });
}

template <class Real>
std::size_t TowerParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const T& t) { n += t.size(); });
  return n;
}

template <class Real>
TowerVars bind_tower(Tape<Real>& tape, const TowerParams<Real>& params, TowerParams<Real>* grads) {
  auto bind = [&](const std::vector<Tensor<Real>>& src, std::vector<Tensor<Real>>* sinks) {
    std::vector<Var> out;
    for (std::size_t i = 0; i < src.size(); ++i)
      out.push_back(sinks ? tape.leaf(src[i], &(*sinks)[i]) : tape.input(src[i]));
    return out;
  };
  TowerVars v;
  v.filters = bind(params.filters, grads ? &grads->filters : nullptr);
  v.merges = bind(params.merges, grads ? &grads->merges : nullptr);
  v.bitwise = bind(params.bitwise, grads ? &grads->bitwise : nullptr);
  v.dense_w = bind(params.dense_w, grads ? &grads->dense_w : nullptr);
  v.dense_b = bind(params.dense_b, grads ? &grads->dense_b : nullptr);
  v.embeddings = bind(params.embeddings, grads ? &grads->embeddings : nullptr);
  return v;
}

template <class Real>
std::vector<Tensor<Real>*> tensor_list(TowerParams<Real>& params) {
  std::vector<Tensor<Real>*> out;
  params.for_each([&](const std::string&, Tensor<Real>& t) { out.push_back(&t); });
  return out;
}

template <class Real>
TowerVars tower_vars_from(const TowerParams<Real>& layout, std::span<const Var> flat) {
  TowerVars v;
  std::size_t at = 0;
  auto next = [&]() {
    if (at >= flat.size()) throw Error("tower_vars_from: too few handles");
    return flat[at++];
  };
  for (std::size_t k = 0; k < layout.filters.size(); ++k) {
    v.filters.push_back(next());
    v.merges.push_back(next());
  }
  for (std::size_t k = 0; k < layout.bitwise.size(); ++k) v.bitwise.push_back(next());
  for (std::size_t k = 0; k < layout.dense_w.size(); ++k) {
    v.dense_w.push_back(next());
    v.dense_b.push_back(next());
  }
  for (std::size_t k = 0; k < layout.embeddings.size(); ++k) v.embeddings.push_back(next());
  return v;
}

template <class Real>
Var tower_forward(Tape<Real>& tape, const TowerParams<Real>& params, const TowerVars& vars,
                  std::span<const std::uint32_t> nodes, const TranslatedGraph& graph,
                  const std::vector<RawRecord>& records) {
  const TowerSpec& spec = params.spec;
  const auto hoods = graph.side_neighborhoods(spec.side);
  if (hoods.size() != spec.relations)
    throw SchemaMismatch(to_string(spec.side) + " tower expects " + std::to_string(spec.relations) +
                         " relation types, translated graph has " + std::to_string(hoods.size()));
  const std::uint32_t q = spec.conv_layers();
  if (q > 0 && graph.rho != spec.rho)
    throw SchemaMismatch("tower rho " + std::to_string(spec.rho) + " differs from translated rho " +
                         std::to_string(graph.rho));
  const std::uint32_t count = graph.node_count(spec.side);
  if (records.size() < count) throw SchemaMismatch("feature records missing for " + to_string(spec.side) + " nodes");
  for (auto n : nodes)
    if (n >= count) throw IndexOutOfRange(to_string(spec.side) + " index " + std::to_string(n));

  const std::uint32_t T = spec.relations;
  const std::uint32_t rho = spec.rho;

  // level l+1 holds the children of level l: relation-major, then parent, then slot
  std::vector<std::vector<std::uint32_t>> level(q + 1);
  std::vector<std::vector<Real>> weight(q + 1);
  level[0].assign(nodes.begin(), nodes.end());
  for (std::uint32_t l = 0; l < q; ++l) {
    const std::size_t P = level[l].size();
    level[l + 1].resize(T * P * rho);
    weight[l + 1].resize(T * P * rho);
    for (std::uint32_t r = 0; r < T; ++r)
      for (std::size_t n = 0; n < P; ++n) {
        const auto& list = (*hoods[r])[level[l][n]];
        for (std::uint32_t j = 0; j < rho; ++j) {
          const std::size_t at = (r * P + n) * rho + j;
          level[l + 1][at] = list[j].node;
          weight[l + 1][at] = static_cast<Real>(list[j].weight);
        }
      }
  }

  std::vector<std::uint32_t> unique;
  for (const auto& lv : level) unique.insert(unique.end(), lv.begin(), lv.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const Var encoded = encode_features(tape, std::span<const std::uint32_t>(unique), records, spec.fields,
                                      std::span<const Var>(vars.embeddings));

  std::vector<Var> h(q + 1);
  for (std::uint32_t l = 0; l <= q; ++l) {
    std::vector<std::uint32_t> pos(level[l].size());
    for (std::size_t i = 0; i < pos.size(); ++i)
      pos[i] = static_cast<std::uint32_t>(std::lower_bound(unique.begin(), unique.end(), level[l][i]) - unique.begin());
    h[l] = tape.gather_rows(encoded, std::move(pos));
  }

  for (std::uint32_t k = 0; k < q; ++k) {
    for (std::uint32_t l = 0; l + k < q; ++l) {
      const std::size_t P = level[l].size();
      std::vector<Var> agg;
      for (std::uint32_t r = 0; r < T; ++r) {
        const std::size_t begin = r * P * rho;
        const Var block = tape.slice_rows(h[l + 1], begin, P * rho);
        if (spec.weighted_aggregation) {
          std::vector<Real> w(weight[l + 1].begin() + begin, weight[l + 1].begin() + begin + P * rho);
          agg.push_back(tape.weighted_mean_rows(block, rho, std::move(w)));
        } else {
          agg.push_back(tape.mean_rows(block, rho));
        }
      }
      if (spec.mode == ConvMode::vectorwise) {
        std::vector<Var> xs{h[l]};
        xs.insert(xs.end(), agg.begin(), agg.end());
        std::vector<Var> g;
        for (std::uint32_t i = 0; i < spec.L; ++i)
          g.push_back(tape.activation(tape.weighted_sum(xs, vars.filters[k], i), spec.conv_act));
        h[l] = tape.activation(tape.weighted_sum(g, vars.merges[k], 0), spec.conv_act);
      } else {
        Var summary = agg[0];
        if (T > 1) {
          const Var avg = tape.constant(Tensor<Real>(1, T, Real(1) / static_cast<Real>(T)));
          summary = tape.weighted_sum(agg, avg, 0);
        }
        const Var parts[2] = {h[l], summary};
        h[l] = tape.activation(tape.matmul_bt(tape.concat_cols(parts), vars.bitwise[k]), spec.conv_act);
      }
    }
  }

  Var out = h[0];
  for (std::size_t i = 0; i < vars.dense_w.size(); ++i) {
    out = tape.add_row(tape.matmul(out, vars.dense_w[i]), vars.dense_b[i]);
    if (i + 1 < vars.dense_w.size()) out = tape.activation(out, spec.dense_act);
  }
  return out;
}

template <class Real>
Tensor<Real> tower_embed(const TowerParams<Real>& params, std::span<const std::uint32_t> nodes,
                         const TranslatedGraph& graph, const std::vector<RawRecord>& records) {
  Tape<Real> tape;
  const TowerVars vars = bind_tower(tape, params, static_cast<TowerParams<Real>*>(nullptr));
  return tape.value(tower_forward(tape, params, vars, nodes, graph, records));
}

template <class Real>
Tensor<Real> aggregate(const Tensor<Real>& neighbors, std::uint32_t rho) {
  require_shape(rho > 0 && neighbors.rows() % rho == 0, "aggregate needs rho rows per node");
  const std::size_t P = neighbors.rows() / rho;
  Tensor<Real> out(P, neighbors.cols());
  const Real inv = Real(1) / static_cast<Real>(rho);
  for (std::size_t p = 0; p < P; ++p) {
    auto dst = out.row(p);
    for (std::uint32_t j = 0; j < rho; ++j) {
      auto src = neighbors.row(p * rho + j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    for (auto& v : dst) v *= inv;
  }
  return out;
}

namespace {
template <class Real>
inline Real apply(Activation act, Real v) {
  switch (act) {
    case Activation::relu:
      return v > Real(0) ? v : Real(0);
    case Activation::tanh:
      return std::tanh(v);
    case Activation::identity:
      break;
  }
  return v;
}
}  // namespace

template <class Real>
Tensor<Real> conv_vectorwise(const Tensor<Real>& self, std::span<const Tensor<Real>> aggregated,
                             const Tensor<Real>& filter, const Tensor<Real>& merge, Activation act) {
  const std::size_t T = aggregated.size();
  const std::size_t L = filter.rows();
  require_shape(filter.cols() == T + 1, "filter must have one column per relation plus self");
  require_shape(merge.rows() == 1 && merge.cols() == L, "merge must be 1 x L");
  for (const auto& a : aggregated) require_shape(a.same_shape(self), "aggregated shape");
  const std::size_t m = self.cols();
  Tensor<Real> out(self.rows(), m);
  std::vector<Real> g(m);
  for (std::size_t p = 0; p < self.rows(); ++p) {
    auto dst = out.row(p);
    for (std::size_t i = 0; i < L; ++i) {
      std::fill(g.begin(), g.end(), Real(0));
      const Real w0 = filter(i, 0);
      auto s = self.row(p);
      for (std::size_t c = 0; c < m; ++c) g[c] += w0 * s[c];
      for (std::size_t r = 0; r < T; ++r) {
        const Real w = filter(i, r + 1);
        auto a = aggregated[r].row(p);
        for (std::size_t c = 0; c < m; ++c) g[c] += w * a[c];
      }
      const Real theta = merge(0, i);
      for (std::size_t c = 0; c < m; ++c) dst[c] += theta * apply(act, g[c]);
    }
    for (auto& v : dst) v = apply(act, v);
  }
  return out;
}

template <class Real>
Tensor<Real> conv_bitwise(const Tensor<Real>& self, const Tensor<Real>& aggregated, const Tensor<Real>& w,
                          Activation act) {
  require_shape(self.same_shape(aggregated), "bitwise inputs");
  const std::size_t m = self.cols();
  require_shape(w.rows() == m && w.cols() == 2 * m, "bitwise weight must be m x 2m");
  Tensor<Real> cat(self.rows(), 2 * m);
  for (std::size_t p = 0; p < self.rows(); ++p) {
    auto s = self.row(p);
    auto a = aggregated.row(p);
    auto d = cat.row(p);
    std::copy(s.begin(), s.end(), d.begin());
    std::copy(a.begin(), a.end(), d.begin() + static_cast<std::ptrdiff_t>(m));
  }
  Tensor<Real> out(self.rows(), m);
  matmul_add_bt(cat, w, out);
  for (auto& v : out.values()) v = apply(act, v);
  return out;
}

FlopCount count_flops(ConvMode mode, std::uint64_t m, std::uint64_t rho, std::uint64_t L, std::uint64_t q,
                      std::uint64_t relations, std::span<const std::uint32_t> dense_widths) {
  FlopCount f;
  const std::uint64_t T = relations;
  if (T > 0) {
    for (std::uint64_t k = 1; k <= q; ++k) {
      std::uint64_t level = 1;
      for (std::uint64_t l = 0; l + k <= q; ++l) {
        f.conv_ops += level;
        level *= T * rho;
      }
    }
    if (mode == ConvMode::vectorwise)
      f.per_op = T * m * rho + (T + 1) * L * m + L * m;
    else
      f.per_op = T * m * rho + 2 * m * m + (T > 1 ? T * m : 0);
  }
  f.conv_total = f.conv_ops * f.per_op;
  for (std::size_t i = 0; i + 1 < dense_widths.size(); ++i)
    f.dense += static_cast<std::uint64_t>(dense_widths[i]) * dense_widths[i + 1];
  f.total = f.conv_total + f.dense;
  return f;
}

#define INTENTGC_INSTANTIATE(R)                                                                                   \
  template struct TowerParams<R>;                                                                                 \
  template std::vector<Tensor<R>*> tensor_list(TowerParams<R>&);                                                  \
  template TowerVars tower_vars_from(const TowerParams<R>&, std::span<const Var>);                                \
  template TowerVars bind_tower(Tape<R>&, const TowerParams<R>&, TowerParams<R>*);                                \
  template Var tower_forward(Tape<R>&, const TowerParams<R>&, const TowerVars&, std::span<const std::uint32_t>,   \
                             const TranslatedGraph&, const std::vector<RawRecord>&);                              \
  template Tensor<R> tower_embed(const TowerParams<R>&, std::span<const std::uint32_t>, const TranslatedGraph&,   \
                                 const std::vector<RawRecord>&);                                                  \
  template Tensor<R> aggregate(const Tensor<R>&, std::uint32_t);                                                  \
  template Tensor<R> conv_vectorwise(const Tensor<R>&, std::span<const Tensor<R>>, const Tensor<R>&,              \
                                     const Tensor<R>&, Activation);                                               \
  template Tensor<R> conv_bitwise(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&, Activation);

INTENTGC_INSTANTIATE(float)
INTENTGC_INSTANTIATE(double)
INTENTGC_INSTANTIATE(long double)

}  // namespace intentgc
