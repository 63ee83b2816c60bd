#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "intentgc/tensor.hpp"

namespace intentgc {

enum class Activation { identity, relu, tanh };

Activation parse_activation(const std::string& name);
std::string to_string(Activation act);

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const noexcept { return id != std::numeric_limits<std::uint32_t>::max(); }
};

/// Reverse-mode gradient recorder.
///
/// Every primitive computes its forward value eagerly and records a backward
/// rule. backward() visits records in strict reverse order of execution and
/// accumulates gradients additively, so a value consumed twice receives the
/// sum of both branch gradients. Every forward value is checked for NaN/Inf.
///
/// A tape belongs to one thread. Leaves created with leaf() reference external
/// storage that must outlive the tape; their gradients are added into the
/// supplied sink when backward() reaches them.
template <class Real>
class Tape {
 public:
  using T = Tensor<Real>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(T value);
  Var leaf(const T& value, T* grad_sink);
  /// References external storage without tracking gradients (inference).
  Var input(const T& value);

  const T& value(Var v) const;
  /// Gradient of the last backward() target with respect to v; empty if v
  /// did not influence it.
  const T& grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_bt(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// a + bias, bias is 1 x cols and broadcast over rows.
  Var add_row(Var a, Var bias);
  /// a * s where s is a 1 x 1 value.
  Var scale(Var a, Var s);
  Var scale(Var a, Real c);
  Var add_scalar(Var a, Real c);
  /// sum_j coeffs(coeff_row, j) * xs[j]; all xs share one shape.
  Var weighted_sum(std::span<const Var> xs, Var coeffs, std::size_t coeff_row);
  Var concat_cols(std::span<const Var> parts);
  /// Mean over consecutive groups of `group` rows; group == rows gives the column mean.
  Var mean_rows(Var a, std::size_t group);
  /// Weighted mean over consecutive groups of `group` rows with constant
  /// weights (one per input row). A group whose weights sum to zero falls
  /// back to the plain mean.
  Var weighted_mean_rows(Var a, std::size_t group, std::vector<Real> weights);
  /// Row i = row idx[i] of a.
  Var gather_rows(Var a, std::vector<std::uint32_t> idx);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var activation(Var a, Activation act);
  /// Row-wise inner product: (rows x 1).
  Var row_dot(Var a, Var b);
  /// max(0, x) elementwise.
  Var hinge(Var a);
  Var sum_all(Var a);
  Var mean_all(Var a);
  /// Row i = mean of table rows listed in ids[i]; an empty list yields zeros.
  Var embedding_mean(Var table, std::vector<std::vector<std::uint32_t>> ids);

  /// Propagates d(loss)/d(.) for a 1 x 1 loss.
  void backward(Var loss);

  /// Sign pattern (x > 0) of every input element of relu/hinge records.
  /// Two evaluations with equal signatures lie on the same smooth piece.
  std::vector<bool> kink_signature() const;

 private:
  using Backprop = std::function<void(Tape&, std::uint32_t)>;

  struct Node {
    T own;
    const T* external = nullptr;
    T grad;
    T* sink = nullptr;
    bool requires_grad = false;
    bool kink = false;
    std::vector<std::uint32_t> inputs;
    Backprop backprop;
  };

  const Node& node(Var v) const;
  const T& val(std::uint32_t id) const;
  T& grad_ref(std::uint32_t id);
  bool needs(std::uint32_t id) const { return nodes_[id].requires_grad; }
  Var record(T value, std::vector<std::uint32_t> inputs, Backprop backprop, const char* op,
             bool kink = false);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Tape<long double>;

}  // namespace intentgc
