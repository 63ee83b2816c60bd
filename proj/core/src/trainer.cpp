#include "intentgc/trainer.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "intentgc/error.hpp"

namespace intentgc {

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  throw ConfigError("unknown precision '" + name + "' (expected f32|f64)");
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

TrainConfig TrainConfig::from(const Config& c) {
  TrainConfig t;
  auto u32 = [&](const char* key, std::uint32_t fallback) {
    const auto v = c.get_u64(key, fallback);
    if (v > 0xffffffffULL) throw ConfigError(std::string(key) + " is too large");
    return static_cast<std::uint32_t>(v);
  };
  t.learning_rate = c.get_double("learning_rate", t.learning_rate);
  t.momentum = c.get_double("momentum", t.momentum);
  t.batch_size = u32("batch_size", t.batch_size);
  t.margin = c.get_double("margin", t.margin);
  t.q = u32("q", t.q);
  t.rho = u32("rho", t.rho);
  t.L = u32("L", t.L);
  t.negatives_per_edge = u32("negatives_per_edge", t.negatives_per_edge);
  t.epochs = u32("epochs", t.epochs);
  t.init_std_network = c.get_double("init_std_network", t.init_std_network);
  t.init_std_embedding = c.get_double("init_std_embedding", t.init_std_embedding);
  t.precision = parse_precision(c.get_string("precision", to_string(t.precision)));
  t.mode = parse_conv_mode(c.get_string("mode", to_string(t.mode)));
  t.conv_act = parse_activation(c.get_string("conv_activation", to_string(t.conv_act)));
  t.dense_act = parse_activation(c.get_string("dense_activation", to_string(t.dense_act)));
  t.dense_widths = c.get_u32_list("dense_widths", t.dense_widths);
  t.weighted_aggregation = c.get_bool("weighted_aggregation", t.weighted_aggregation);
  t.seed = c.get_u64("seed", t.seed);
  t.threads = u32("threads", t.threads);
  t.max_resample = u32("max_resample", t.max_resample);
  t.checkpoint_every = u32("checkpoint_every", t.checkpoint_every);
  t.eval_every = u32("eval_every", t.eval_every);
  t.early_stop_patience = u32("early_stop_patience", t.early_stop_patience);
  t.validate();
  return t;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(learning_rate > 0, "learning_rate must be > 0");
  require(momentum >= 0 && momentum < 1, "momentum must be in [0, 1)");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(margin >= 0, "margin must be >= 0");
  require(rho >= 1, "rho must be >= 1");
  require(L >= 1, "L must be >= 1");
  require(negatives_per_edge >= 1, "negatives_per_edge must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(init_std_network > 0 && init_std_embedding > 0, "init stddevs must be > 0");
  require(threads >= 1, "threads must be >= 1");
  require(!dense_widths.empty(), "dense_widths must not be empty");
  for (auto w : dense_widths) require(w >= 1, "dense_widths entries must be >= 1");
}

TowerSpec make_tower_spec(const TrainConfig& config, Side side, const TranslatedGraph& graph,
                          const FeatureSchema& schema) {
  TowerSpec spec;
  spec.side = side;
  spec.mode = config.mode;
  spec.q = config.q;
  spec.L = config.L;
  spec.relations = graph.relation_count(side);
  if (config.rho != graph.rho)
    throw ConfigError("config rho " + std::to_string(config.rho) + " differs from translated graph rho " +
                      std::to_string(graph.rho));
  spec.rho = config.rho;
  spec.dense_widths = config.dense_widths;
  spec.conv_act = config.conv_act;
  spec.dense_act = config.dense_act;
  spec.weighted_aggregation = config.weighted_aggregation;
  spec.fields = schema.fields(side);
  spec.validate();
  return spec;
}

double triplet_loss(std::span<const double> zu, std::span<const double> zpos, std::span<const double> zneg,
                    double delta) {
  require_shape(zu.size() == zpos.size() && zu.size() == zneg.size(), "triplet_loss widths");
  double pos = 0, neg = 0;
  for (std::size_t i = 0; i < zu.size(); ++i) {
    pos += zu[i] * zpos[i];
    neg += zu[i] * zneg[i];
  }
  return std::max(0.0, neg - pos + delta);
}

namespace {

/// Sorted distinct values plus, for each input, its position among them.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> dedupe(const std::vector<std::uint32_t>& xs) {
  std::vector<std::uint32_t> uniq = xs;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<std::uint32_t> pos(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    pos[i] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), xs[i]) - uniq.begin());
  return {std::move(uniq), std::move(pos)};
}

template <class Real>
ModelParams<Real> zeros_like(const ModelParams<Real>& m) {
  return {TowerParams<Real>::zeros(m.user.spec), TowerParams<Real>::zeros(m.item.spec)};
}

template <class Real>
void add_into(ModelParams<Real>& dst, ModelParams<Real>& src) {
  for (Side s : {Side::user, Side::item}) {
    auto d = tensor_list(dst.tower(s));
    auto v = tensor_list(src.tower(s));
    for (std::size_t i = 0; i < d.size(); ++i) *d[i] += *v[i];
  }
}

}  // namespace

template <class Real>
Var batch_loss(Tape<Real>& tape, const ModelParams<Real>& model, const TowerVars& user_vars,
               const TowerVars& item_vars, std::span<const TrainTuple> tuples, const TranslatedGraph& graph,
               const RawFeatures& features, Real margin, std::size_t divisor) {
  require_shape(!tuples.empty() && divisor > 0, "batch_loss needs tuples");
  std::vector<std::uint32_t> users, items;
  for (const auto& t : tuples) {
    users.push_back(t.user);
    items.push_back(t.positive);
  }
  for (const auto& t : tuples) items.push_back(t.negative);
  auto [uu, upos] = dedupe(users);
  auto [iu, ipos] = dedupe(items);
  const Var zu_all = tower_forward(tape, model.user, user_vars, uu, graph, features.users);
  const Var zi_all = tower_forward(tape, model.item, item_vars, iu, graph, features.items);
  const std::size_t n = tuples.size();
  const Var zu = tape.gather_rows(zu_all, std::move(upos));
  const Var zpos = tape.gather_rows(zi_all, std::vector<std::uint32_t>(ipos.begin(), ipos.begin() + n));
  const Var zneg = tape.gather_rows(zi_all, std::vector<std::uint32_t>(ipos.begin() + n, ipos.end()));
  const Var diff = tape.sub(tape.row_dot(zu, zneg), tape.row_dot(zu, zpos));
  const Var hinge = tape.hinge(tape.add_scalar(diff, margin));
  return tape.scale(tape.sum_all(hinge), Real(1) / static_cast<Real>(divisor));
}

template <class Real>
Trainer<Real>::Trainer(const TrainData& data, TrainConfig config)
    : data_(data), config_(std::move(config)), sampler_(data.graph, config_.max_resample), rng_(config_.seed) {
  config_.validate();
  if (data.graph.labeled_edges().empty()) throw ConfigError("no labeled edges to train on");
  if (data.graph.user_count() != data.translated.users || data.graph.item_count() != data.translated.items)
    throw SchemaMismatch("graph and translated graph disagree on node counts");
  for (Side s : {Side::user, Side::item}) {
    const auto spec = make_tower_spec(config_, s, data.translated, data.features.schema);
    model_.tower(s) =
        TowerParams<Real>::random(spec, rng_, config_.init_std_network, config_.init_std_embedding);
  }
  velocity_ = zeros_like(model_);
}

template <class Real>
std::vector<TrainTuple> Trainer<Real>::sample_tuples(std::size_t edges) {
  const auto& labels = data_.graph.labeled_edges();
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  std::vector<TrainTuple> out;
  for (std::size_t e = 0; e < edges; ++e) {
    const auto [user, item] = labels[pick(rng_)];
    for (std::uint32_t k = 0; k < config_.negatives_per_edge; ++k)
      if (auto neg = sampler_.sample(user, item, rng_)) out.push_back({user, item, *neg});
  }
  return out;
}

template <class Real>
double Trainer<Real>::loss_and_gradient(std::span<const TrainTuple> tuples, ModelParams<Real>& grads) {
  grads = zeros_like(model_);
  if (tuples.empty()) return 0;
  const Real margin = static_cast<Real>(config_.margin);
  auto run = [&](std::span<const TrainTuple> part, ModelParams<Real>& sink) {
    Tape<Real> tape;
    const TowerVars uv = bind_tower(tape, model_.user, &sink.user);
    const TowerVars iv = bind_tower(tape, model_.item, &sink.item);
    const Var loss =
        batch_loss(tape, model_, uv, iv, part, data_.translated, data_.features.features, margin, tuples.size());
    tape.backward(loss);
    return static_cast<double>(tape.value(loss)[0]);
  };
  const std::size_t workers = std::min<std::size_t>(config_.threads, tuples.size());
  if (workers <= 1) return run(tuples, grads);

  std::vector<ModelParams<Real>> local(workers);
  std::vector<double> losses(workers, 0.0);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (tuples.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    local[w] = zeros_like(model_);
    const std::size_t begin = std::min(tuples.size(), w * chunk);
    const std::size_t end = std::min(tuples.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        if (begin < end) losses[w] = run(tuples.subspan(begin, end - begin), local[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double loss = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    add_into(grads, local[w]);
    loss += losses[w];
  }
  return loss;
}

template <class Real>
void Trainer<Real>::apply_update(const ModelParams<Real>& grads) {
  const Real mu = static_cast<Real>(config_.momentum);
  const Real lr = static_cast<Real>(config_.learning_rate);
  for (Side s : {Side::user, Side::item}) {
    auto params = tensor_list(model_.tower(s));
    auto vel = tensor_list(velocity_.tower(s));
    auto g = tensor_list(const_cast<TowerParams<Real>&>(grads.tower(s)));
    for (std::size_t t = 0; t < params.size(); ++t) {
      Tensor<Real>& p = *params[t];
      Tensor<Real>& v = *vel[t];
      const Tensor<Real>& d = *g[t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = mu * v[i] - lr * d[i];
        p[i] += v[i];
      }
    }
  }
}

template <class Real>
EpochStats Trainer<Real>::run_epoch() {
  EpochStats stats;
  stats.epoch = ++epoch_;
  const std::size_t draws = data_.graph.labeled_edges().size();
  const std::size_t per_batch = (config_.batch_size + config_.negatives_per_edge - 1) / config_.negatives_per_edge;
  const std::uint64_t skipped_before = sampler_.skipped();
  double total = 0;
  ModelParams<Real> grads;
  std::size_t batch = 0;
  for (std::size_t drawn = 0; drawn < draws; drawn += per_batch, ++batch) {
    const auto tuples = sample_tuples(std::min(per_batch, draws - drawn));
    if (tuples.empty()) continue;
    double loss = 0;
    try {
      loss = loss_and_gradient(tuples, grads);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(stats.epoch) + " batch " + std::to_string(batch) + ": " +
                         e.what());
    }
    apply_update(grads);
    total += loss * static_cast<double>(tuples.size());
    stats.tuples += tuples.size();
  }
  for (Side s : {Side::user, Side::item})
    for (auto* t : tensor_list(model_.tower(s)))
      if (!t->all_finite()) throw NumericError("epoch " + std::to_string(stats.epoch) + ": parameters diverged");
  stats.loss = stats.tuples ? total / static_cast<double>(stats.tuples) : 0.0;
  stats.skipped = sampler_.skipped() - skipped_before;
  return stats;
}

template <class Real>
std::vector<EpochStats> Trainer<Real>::train(const EpochCallback& on_epoch, const Validator& validate) {
  std::vector<EpochStats> history;
  double best = -1;
  std::uint32_t stale = 0;
  for (std::uint32_t e = 0; e < config_.epochs; ++e) {
    EpochStats stats = run_epoch();
    bool stop = false;
    if (validate && config_.eval_every > 0 && stats.epoch % config_.eval_every == 0) {
      stats.val_auc = validate(model_);
      if (*stats.val_auc > best) {
        best = *stats.val_auc;
        stale = 0;
      } else if (config_.early_stop_patience > 0 && ++stale >= config_.early_stop_patience) {
        stop = true;
      }
    }
    history.push_back(stats);
    if (on_epoch) on_epoch(stats, model_);
    if (stop) break;
  }
  return history;
}

template Var batch_loss(Tape<float>&, const ModelParams<float>&, const TowerVars&, const TowerVars&,
                        std::span<const TrainTuple>, const TranslatedGraph&, const RawFeatures&, float, std::size_t);
template Var batch_loss(Tape<double>&, const ModelParams<double>&, const TowerVars&, const TowerVars&,
                        std::span<const TrainTuple>, const TranslatedGraph&, const RawFeatures&, double,
                        std::size_t);
template Var batch_loss(Tape<long double>&, const ModelParams<long double>&, const TowerVars&, const TowerVars&,
                        std::span<const TrainTuple>, const TranslatedGraph&, const RawFeatures&, long double,
                        std::size_t);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace intentgc
