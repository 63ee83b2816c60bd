#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "intentgc/features.hpp"
#include "intentgc/tape.hpp"
#include "intentgc/tensor.hpp"
#include "intentgc/translate.hpp"

namespace intentgc {

enum class ConvMode { vectorwise, bitwise };

ConvMode parse_conv_mode(const std::string& name);
std::string to_string(ConvMode mode);

/// Shape and hyperparameters of one tower.
struct TowerSpec {
  Side side = Side::user;
  ConvMode mode = ConvMode::vectorwise;
  std::uint32_t q = 2;
  std::uint32_t L = 3;
  std::uint32_t relations = 0;  ///< T; 0 disables convolution
  std::uint32_t rho = 10;
  /// dense_widths[0] is the encoded feature width m; the rest are layer outputs.
  std::vector<std::uint32_t> dense_widths{110, 800, 300, 100};
  Activation conv_act = Activation::relu;
  Activation dense_act = Activation::relu;
  bool weighted_aggregation = false;
  std::vector<FeatureField> fields;

  std::uint32_t width() const { return dense_widths.front(); }
  std::uint32_t output_width() const { return dense_widths.back(); }
  /// Number of conv layers actually applied.
  std::uint32_t conv_layers() const { return relations == 0 ? 0 : q; }
  void validate() const;

  friend bool operator==(const TowerSpec&, const TowerSpec&) = default;
};

std::string format_tower_spec(const TowerSpec& spec);
TowerSpec parse_tower_spec(const std::string& text);

/// Trainable state of one tower.
template <class Real>
struct TowerParams {
  using T = Tensor<Real>;

  TowerSpec spec;
  std::vector<T> filters;   ///< per layer, L x (T+1); column 0 weighs the node itself
  std::vector<T> merges;    ///< per layer, 1 x L
  std::vector<T> bitwise;   ///< per layer, m x 2m
  std::vector<T> dense_w;   ///< in x out
  std::vector<T> dense_b;   ///< 1 x out
  std::vector<T> embeddings;  ///< one per discrete field, vocab x dim

  /// Allocates zero tensors of the right shapes.
  static TowerParams zeros(const TowerSpec& spec);
  /// Zero-mean Gaussian draws; biases zero.
  static TowerParams random(const TowerSpec& spec, std::mt19937_64& rng, double network_std,
                            double embedding_std);

  /// Visits every tensor with a stable name, in a fixed order.
  void for_each(const std::function<void(const std::string&, T&)>& f);
  void for_each(const std::function<void(const std::string&, const T&)>& f) const;
  std::size_t parameter_count() const;
};

/// Tape handles for a tower's tensors, in the same layout as TowerParams.
struct TowerVars {
  std::vector<Var> filters, merges, bitwise, dense_w, dense_b, embeddings;
};

/// Registers params on the tape. With grads, every tensor becomes a leaf whose
/// gradient is added into the matching tensor of *grads; without, an input.
template <class Real>
TowerVars bind_tower(Tape<Real>& tape, const TowerParams<Real>& params, TowerParams<Real>* grads);

/// Tensors of params in for_each order.
template <class Real>
std::vector<Tensor<Real>*> tensor_list(TowerParams<Real>& params);

/// Rebuilds TowerVars from handles listed in for_each order (as produced by
/// binding tensor_list()); consumes exactly tensor_list().size() handles.
template <class Real>
TowerVars tower_vars_from(const TowerParams<Real>& layout, std::span<const Var> flat);

/// Tower embeddings for `nodes` (rows of the result, in order).
/// Expands the q-hop neighborhood tree over every relation of the spec's
/// side, encodes leaf features, applies the conv layers bottom-up and then
/// the dense stack.
template <class Real>
Var tower_forward(Tape<Real>& tape, const TowerParams<Real>& params, const TowerVars& vars,
                  std::span<const std::uint32_t> nodes, const TranslatedGraph& graph,
                  const std::vector<RawRecord>& records);

/// Convenience wrapper running tower_forward on a private tape.
template <class Real>
Tensor<Real> tower_embed(const TowerParams<Real>& params, std::span<const std::uint32_t> nodes,
                         const TranslatedGraph& graph, const std::vector<RawRecord>& records);

// Standalone layer kernels over row batches. Used as the reference path by
// tests and by the conv benchmark.

/// Mean over consecutive groups of rho rows.
template <class Real>
Tensor<Real> aggregate(const Tensor<Real>& neighbors, std::uint32_t rho);

/// self is P x m, aggregated holds T tensors of P x m.
template <class Real>
Tensor<Real> conv_vectorwise(const Tensor<Real>& self, std::span<const Tensor<Real>> aggregated,
                             const Tensor<Real>& filter, const Tensor<Real>& merge, Activation act);

/// W is m x 2m; aggregated is a single P x m neighborhood summary.
template <class Real>
Tensor<Real> conv_bitwise(const Tensor<Real>& self, const Tensor<Real>& aggregated, const Tensor<Real>& w,
                          Activation act);

/// Multiply-add counts per node for one tower.
struct FlopCount {
  std::uint64_t conv_ops = 0;     ///< convolution operations per node
  std::uint64_t per_op = 0;       ///< multiply-adds per convolution operation
  std::uint64_t conv_total = 0;   ///< conv_ops * per_op
  std::uint64_t dense = 0;        ///< dense stack
  std::uint64_t total = 0;
};

/// Per conv op: vector-wise T*m*rho + (T+1)*L*m + L*m; bit-wise T*m*rho + 2*m*m
/// (+ T*m to average relation summaries when T > 1). conv_ops sums the tree
/// sizes (T*rho)^l over the levels each layer computes.
FlopCount count_flops(ConvMode mode, std::uint64_t m, std::uint64_t rho, std::uint64_t L, std::uint64_t q,
                      std::uint64_t relations = 1, std::span<const std::uint32_t> dense_widths = {});

/// Both towers.
template <class Real>
struct ModelParams {
  TowerParams<Real> user;
  TowerParams<Real> item;

  TowerParams<Real>& tower(Side s) { return s == Side::user ? user : item; }
  const TowerParams<Real>& tower(Side s) const { return s == Side::user ? user : item; }
};

extern template struct TowerParams<float>;
extern template struct TowerParams<double>;
extern template struct TowerParams<long double>;

}  // namespace intentgc
