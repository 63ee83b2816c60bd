#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "intentgc/config.hpp"
#include "intentgc/features.hpp"
#include "intentgc/intentnet.hpp"
#include "intentgc/sampling.hpp"
#include "intentgc/translate.hpp"

namespace intentgc {

enum class Precision { f32, f64 };
Precision parse_precision(const std::string& name);
std::string to_string(Precision p);

struct TrainConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
  std::uint32_t batch_size = 200;  ///< tuples per batch
  double margin = 0.3;
  std::uint32_t q = 2;
  std::uint32_t rho = 10;
  std::uint32_t L = 3;
  std::uint32_t negatives_per_edge = 5;
  std::uint32_t epochs = 10;
  double init_std_network = 0.8;
  double init_std_embedding = 0.4;
  Precision precision = Precision::f64;
  ConvMode mode = ConvMode::vectorwise;
  Activation conv_act = Activation::relu;
  Activation dense_act = Activation::relu;
  std::vector<std::uint32_t> dense_widths{110, 800, 300, 100};
  bool weighted_aggregation = false;
  std::uint64_t seed = 1;
  std::uint32_t threads = 1;
  std::uint32_t max_resample = 50;
  std::uint32_t checkpoint_every = 0;
  std::uint32_t eval_every = 0;
  std::uint32_t early_stop_patience = 0;

  static TrainConfig from(const Config& config);
  void validate() const;
};

/// Tower spec for one side, derived from the config, the translated graph
/// (relation count, rho) and the feature schema.
TowerSpec make_tower_spec(const TrainConfig& config, Side side, const TranslatedGraph& graph,
                          const FeatureSchema& schema);

struct TrainTuple {
  std::uint32_t user = 0;
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;
};

/// max(0, z_u.z_neg - z_u.z_pos + delta) for one triple of rows.
double triplet_loss(std::span<const double> zu, std::span<const double> zpos, std::span<const double> zneg,
                    double delta);

/// Sum over tuples of the triplet hinge, divided by `divisor` (the full
/// batch size, so per-worker pieces add up to the batch mean).
template <class Real>
Var batch_loss(Tape<Real>& tape, const ModelParams<Real>& model, const TowerVars& user_vars,
               const TowerVars& item_vars, std::span<const TrainTuple> tuples, const TranslatedGraph& graph,
               const RawFeatures& features, Real margin, std::size_t divisor);

/// Everything the trainer reads. All references must outlive the trainer.
struct TrainData {
  const TypedGraph& graph;
  const TranslatedGraph& translated;
  const FeatureFile& features;
};

struct EpochStats {
  std::uint32_t epoch = 0;
  double loss = 0;
  std::uint64_t tuples = 0;
  std::uint64_t skipped = 0;
  std::optional<double> val_auc;
};

template <class Real>
class Trainer {
 public:
  using Validator = std::function<double(const ModelParams<Real>&)>;
  using EpochCallback = std::function<void(const EpochStats&, const ModelParams<Real>&)>;

  Trainer(const TrainData& data, TrainConfig config);

  const ModelParams<Real>& model() const noexcept { return model_; }
  ModelParams<Real>& model() noexcept { return model_; }
  const TrainConfig& config() const noexcept { return config_; }

  /// Draws the tuples of one batch from `edges` sampled labeled edges.
  std::vector<TrainTuple> sample_tuples(std::size_t edges);
  /// Batch-mean loss; gradients are written into *grads (zeroed first).
  double loss_and_gradient(std::span<const TrainTuple> tuples, ModelParams<Real>& grads);
  /// v <- mu v - lr g; params <- params + v.
  void apply_update(const ModelParams<Real>& grads);
  EpochStats run_epoch();
  /// Runs config.epochs epochs (or until early stop) and returns the stats.
  std::vector<EpochStats> train(const EpochCallback& on_epoch = {}, const Validator& validate = {});

 private:
  TrainData data_;
  TrainConfig config_;
  ModelParams<Real> model_;
  ModelParams<Real> velocity_;
  NegativeSampler sampler_;
  std::mt19937_64 rng_;
  std::uint32_t epoch_ = 0;
};

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace intentgc
