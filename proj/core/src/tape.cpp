#include "intentgc/tape.hpp"

#include <algorithm>
#include <cmath>

#include "intentgc/error.hpp"

namespace intentgc {

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "' (expected identity|relu|tanh)");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "identity";
}

template <class Real>
const typename Tape<Real>::Node& Tape<Real>::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("tape: invalid variable handle");
  return nodes_[v.id];
}

template <class Real>
const Tensor<Real>& Tape<Real>::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.own;
}

template <class Real>
Tensor<Real>& Tape<Real>::grad_ref(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !val(id).empty()) {
    const T& v = val(id);
    n.grad = T(v.rows(), v.cols());
  }
  return n.grad;
}

template <class Real>
Var Tape<Real>::record(T value, std::vector<std::uint32_t> inputs, Backprop backprop, const char* op,
                       bool kink) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite result in ") + op);
  Node n;
  n.own = std::move(value);
  for (auto id : inputs) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  n.inputs = std::move(inputs);
  n.backprop = std::move(backprop);
  n.kink = kink;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class Real>
Var Tape<Real>::constant(T value) {
  if (!value.all_finite()) throw NumericError("non-finite constant");
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class Real>
Var Tape<Real>::leaf(const T& value, T* grad_sink) {
  if (!value.all_finite()) throw NumericError("non-finite parameter");
  if (grad_sink) require_shape(grad_sink->same_shape(value), "leaf gradient sink");
  Node n;
  n.external = &value;
  n.sink = grad_sink;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class Real>
Var Tape<Real>::input(const T& value) {
  if (!value.all_finite()) throw NumericError("non-finite input");
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class Real>
const Tensor<Real>& Tape<Real>::value(Var v) const {
  node(v);
  return val(v.id);
}

template <class Real>
const Tensor<Real>& Tape<Real>::grad(Var v) const {
  return node(v).grad;
}

template <class Real>
Var Tape<Real>::matmul(Var a, Var b) {
  T out = intentgc::matmul(value(a), value(b));
  return record(
      std::move(out), {a.id, b.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        const std::uint32_t ia = n.inputs[0], ib = n.inputs[1];
        if (t.needs(ia)) matmul_add_bt(n.grad, t.val(ib), t.grad_ref(ia));
        if (t.needs(ib)) matmul_add_at(t.val(ia), n.grad, t.grad_ref(ib));
      },
      "matmul");
}

template <class Real>
Var Tape<Real>::matmul_bt(Var a, Var b) {
  const T& x = value(a);
  const T& w = value(b);
  require_shape(x.cols() == w.cols(), "matmul_bt inner dimensions");
  T out(x.rows(), w.rows());
  matmul_add_bt(x, w, out);
  return record(
      std::move(out), {a.id, b.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        const std::uint32_t ia = n.inputs[0], ib = n.inputs[1];
        if (t.needs(ia)) matmul_add(n.grad, t.val(ib), t.grad_ref(ia));
        if (t.needs(ib)) matmul_add_at(n.grad, t.val(ia), t.grad_ref(ib));
      },
      "matmul_bt");
}

template <class Real>
Var Tape<Real>::add(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  require_shape(x.same_shape(y), "add");
  T out = x;
  out += y;
  return record(
      std::move(out), {a.id, b.id},
      [](Tape& t, std::uint32_t self) {
        for (auto in : t.nodes_[self].inputs)
          if (t.needs(in)) t.grad_ref(in) += t.nodes_[self].grad;
      },
      "add");
}

template <class Real>
Var Tape<Real>::sub(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  require_shape(x.same_shape(y), "sub");
  T out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return record(
      std::move(out), {a.id, b.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (t.needs(n.inputs[0])) t.grad_ref(n.inputs[0]) += n.grad;
        if (t.needs(n.inputs[1])) {
          T& g = t.grad_ref(n.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
      },
      "sub");
}

template <class Real>
Var Tape<Real>::add_row(Var a, Var bias) {
  const T& x = value(a);
  const T& b = value(bias);
  require_shape(b.rows() == 1 && b.cols() == x.cols(), "add_row bias must be 1 x cols");
  T out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return record(
      std::move(out), {a.id, bias.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (t.needs(n.inputs[0])) t.grad_ref(n.inputs[0]) += n.grad;
        if (t.needs(n.inputs[1])) {
          T& g = t.grad_ref(n.inputs[1]);
          for (std::size_t r = 0; r < n.grad.rows(); ++r) {
            auto row = n.grad.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) g[c] += row[c];
          }
        }
      },
      "add_row");
}

template <class Real>
Var Tape<Real>::scale(Var a, Var s) {
  const T& x = value(a);
  const T& sv = value(s);
  require_shape(sv.rows() == 1 && sv.cols() == 1, "scale factor must be 1 x 1");
  T out = x;
  out *= sv[0];
  return record(
      std::move(out), {a.id, s.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        const std::uint32_t ia = n.inputs[0], is = n.inputs[1];
        if (t.needs(ia)) {
          T& g = t.grad_ref(ia);
          const Real f = t.val(is)[0];
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * n.grad[i];
        }
        if (t.needs(is)) {
          const T& x = t.val(ia);
          Real acc = 0;
          for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * n.grad[i];
          t.grad_ref(is)[0] += acc;
        }
      },
      "scale");
}

template <class Real>
Var Tape<Real>::scale(Var a, Real c) {
  T out = value(a);
  out *= c;
  return record(
      std::move(out), {a.id},
      [c](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
      },
      "scale");
}

template <class Real>
Var Tape<Real>::add_scalar(Var a, Real c) {
  T out = value(a);
  for (auto& v : out.values()) v += c;
  return record(
      std::move(out), {a.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (t.needs(n.inputs[0])) t.grad_ref(n.inputs[0]) += n.grad;
      },
      "add_scalar");
}

template <class Real>
Var Tape<Real>::weighted_sum(std::span<const Var> xs, Var coeffs, std::size_t coeff_row) {
  require_shape(!xs.empty(), "weighted_sum needs at least one input");
  const T& w = value(coeffs);
  require_shape(coeff_row < w.rows() && w.cols() == xs.size(), "weighted_sum coefficient shape");
  const T& first = value(xs[0]);
  T out(first.rows(), first.cols());
  std::vector<std::uint32_t> inputs;
  inputs.reserve(xs.size() + 1);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const T& x = value(xs[j]);
    require_shape(x.same_shape(first), "weighted_sum operands");
    const Real c = w(coeff_row, j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * x[i];
    inputs.push_back(xs[j].id);
  }
  inputs.push_back(coeffs.id);
  return record(
      std::move(out), std::move(inputs),
      [coeff_row](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        const std::size_t count = n.inputs.size() - 1;
        const std::uint32_t iw = n.inputs.back();
        for (std::size_t j = 0; j < count; ++j) {
          const std::uint32_t ix = n.inputs[j];
          if (t.needs(ix)) {
            const Real c = t.val(iw)(coeff_row, j);
            T& g = t.grad_ref(ix);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
          }
          if (t.needs(iw)) {
            const T& x = t.val(ix);
            Real acc = 0;
            for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * n.grad[i];
            t.grad_ref(iw)(coeff_row, j) += acc;
          }
        }
      },
      "weighted_sum");
}

template <class Real>
Var Tape<Real>::concat_cols(std::span<const Var> parts) {
  require_shape(!parts.empty(), "concat_cols needs at least one input");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  std::vector<std::uint32_t> inputs;
  for (auto p : parts) {
    require_shape(value(p).rows() == rows, "concat_cols row counts");
    cols += value(p).cols();
    inputs.push_back(p.id);
  }
  T out(rows, cols);
  std::size_t offset = 0;
  for (auto p : parts) {
    const T& x = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, offset + c) = x(r, c);
    offset += x.cols();
  }
  return record(
      std::move(out), std::move(inputs),
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        std::size_t off = 0;
        for (auto in : n.inputs) {
          const std::size_t w = t.val(in).cols();
          if (t.needs(in)) {
            T& g = t.grad_ref(in);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < w; ++c) g(r, c) += n.grad(r, off + c);
          }
          off += w;
        }
      },
      "concat_cols");
}

template <class Real>
Var Tape<Real>::mean_rows(Var a, std::size_t group) {
  const T& x = value(a);
  require_shape(group > 0 && x.rows() % group == 0, "mean_rows group must divide rows");
  const std::size_t out_rows = x.rows() / group;
  T out(out_rows, x.cols());
  const Real inv = Real(1) / static_cast<Real>(group);
  for (std::size_t o = 0; o < out_rows; ++o) {
    auto dst = out.row(o);
    for (std::size_t k = 0; k < group; ++k) {
      auto src = x.row(o * group + k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    for (auto& v : dst) v *= inv;
  }
  return record(
      std::move(out), {a.id},
      [group, inv](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (std::size_t o = 0; o < n.grad.rows(); ++o) {
          auto src = n.grad.row(o);
          for (std::size_t k = 0; k < group; ++k) {
            auto dst = g.row(o * group + k);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += inv * src[c];
          }
        }
      },
      "mean_rows");
}

template <class Real>
Var Tape<Real>::weighted_mean_rows(Var a, std::size_t group, std::vector<Real> weights) {
  const T& x = value(a);
  require_shape(group > 0 && x.rows() % group == 0, "weighted_mean_rows group must divide rows");
  require_shape(weights.size() == x.rows(), "weighted_mean_rows needs one weight per row");
  const std::size_t out_rows = x.rows() / group;
  // normalize in place so the backward pass reuses the coefficients
  for (std::size_t o = 0; o < out_rows; ++o) {
    Real total = 0;
    for (std::size_t k = 0; k < group; ++k) total += weights[o * group + k];
    for (std::size_t k = 0; k < group; ++k) {
      Real& w = weights[o * group + k];
      w = total > Real(0) ? w / total : Real(1) / static_cast<Real>(group);
    }
  }
  T out(out_rows, x.cols());
  for (std::size_t o = 0; o < out_rows; ++o) {
    auto dst = out.row(o);
    for (std::size_t k = 0; k < group; ++k) {
      const Real w = weights[o * group + k];
      auto src = x.row(o * group + k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  return record(
      std::move(out), {a.id},
      [group, weights = std::move(weights)](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (std::size_t o = 0; o < n.grad.rows(); ++o) {
          auto src = n.grad.row(o);
          for (std::size_t k = 0; k < group; ++k) {
            const Real w = weights[o * group + k];
            auto dst = g.row(o * group + k);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
          }
        }
      },
      "weighted_mean_rows");
}

template <class Real>
Var Tape<Real>::gather_rows(Var a, std::vector<std::uint32_t> idx) {
  const T& x = value(a);
  T out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= x.rows()) throw IndexOutOfRange("gather_rows index " + std::to_string(idx[r]));
    auto src = x.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return record(
      std::move(out), {a.id},
      [idx = std::move(idx)](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          auto src = n.grad.row(r);
          auto dst = g.row(idx[r]);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
        }
      },
      "gather_rows");
}

template <class Real>
Var Tape<Real>::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const T& x = value(a);
  require_shape(begin + count <= x.rows(), "slice_rows range");
  std::vector<Real> data(x.data() + begin * x.cols(), x.data() + (begin + count) * x.cols());
  T out(count, x.cols(), std::move(data));
  return record(
      std::move(out), {a.id},
      [begin](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        Real* dst = g.data() + begin * g.cols();
        for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
      },
      "slice_rows");
}

template <class Real>
Var Tape<Real>::activation(Var a, Activation act) {
  T out = value(a);
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (auto& v : out.values()) v = v > Real(0) ? v : Real(0);
      break;
    case Activation::tanh:
      for (auto& v : out.values()) v = std::tanh(v);
      break;
  }
  return record(
      std::move(out), {a.id},
      [act](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        const T& x = t.val(n.inputs[0]);
        const T& y = n.own;
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (act) {
            case Activation::identity:
              g[i] += n.grad[i];
              break;
            case Activation::relu:
              if (x[i] > Real(0)) g[i] += n.grad[i];
              break;
            case Activation::tanh:
              g[i] += (Real(1) - y[i] * y[i]) * n.grad[i];
              break;
          }
        }
      },
      "activation", act == Activation::relu);
}

template <class Real>
Var Tape<Real>::row_dot(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  require_shape(x.same_shape(y), "row_dot");
  T out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Real acc = 0;
    auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t c = 0; c < xr.size(); ++c) acc += xr[c] * yr[c];
    out(r, 0) = acc;
  }
  return record(
      std::move(out), {a.id, b.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        const std::uint32_t ia = n.inputs[0], ib = n.inputs[1];
        for (int side = 0; side < 2; ++side) {
          const std::uint32_t target = side == 0 ? ia : ib;
          const std::uint32_t other = side == 0 ? ib : ia;
          if (!t.needs(target)) continue;
          T& g = t.grad_ref(target);
          const T& o = t.val(other);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            const Real s = n.grad(r, 0);
            auto gr = g.row(r);
            auto orow = o.row(r);
            for (std::size_t c = 0; c < gr.size(); ++c) gr[c] += s * orow[c];
          }
        }
      },
      "row_dot");
}

template <class Real>
Var Tape<Real>::hinge(Var a) {
  T out = value(a);
  for (auto& v : out.values()) v = v > Real(0) ? v : Real(0);
  return record(
      std::move(out), {a.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        const T& x = t.val(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > Real(0)) g[i] += n.grad[i];
      },
      "hinge", true);
}

template <class Real>
Var Tape<Real>::sum_all(Var a) {
  const T& x = value(a);
  Real acc = 0;
  for (auto v : x.values()) acc += v;
  return record(
      T(1, 1, acc), {a.id},
      [](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (auto& v : g.values()) v += n.grad[0];
      },
      "sum_all");
}

template <class Real>
Var Tape<Real>::mean_all(Var a) {
  const std::size_t count = value(a).size();
  require_shape(count > 0, "mean_all of empty tensor");
  return scale(sum_all(a), Real(1) / static_cast<Real>(count));
}

template <class Real>
Var Tape<Real>::embedding_mean(Var table, std::vector<std::vector<std::uint32_t>> ids) {
  const T& w = value(table);
  T out(ids.size(), w.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r].empty()) continue;
    auto dst = out.row(r);
    for (auto id : ids[r]) {
      if (id >= w.rows()) throw IndexOutOfRange("embedding row " + std::to_string(id) + " >= table rows " +
                                                std::to_string(w.rows()));
      auto src = w.row(id);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    const Real inv = Real(1) / static_cast<Real>(ids[r].size());
    for (auto& v : dst) v *= inv;
  }
  return record(
      std::move(out), {table.id},
      [ids = std::move(ids)](Tape& t, std::uint32_t self) {
        const auto& n = t.nodes_[self];
        if (!t.needs(n.inputs[0])) return;
        T& g = t.grad_ref(n.inputs[0]);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          if (ids[r].empty()) continue;
          const Real inv = Real(1) / static_cast<Real>(ids[r].size());
          auto src = n.grad.row(r);
          for (auto id : ids[r]) {
            auto dst = g.row(id);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += inv * src[c];
          }
        }
      },
      "embedding_mean");
}

template <class Real>
void Tape<Real>::backward(Var loss) {
  const T& l = value(loss);
  require_shape(l.rows() == 1 && l.cols() == 1, "backward target must be 1 x 1");
  for (auto& n : nodes_) n.grad = T();
  grad_ref(loss.id)[0] = Real(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backprop) n.backprop(*this, static_cast<std::uint32_t>(i));
    if (n.sink) *n.sink += n.grad;
  }
}

template <class Real>
std::vector<bool> Tape<Real>::kink_signature() const {
  std::vector<bool> sig;
  for (const auto& n : nodes_) {
    if (!n.kink) continue;
    for (auto v : val(n.inputs[0]).values()) sig.push_back(v > Real(0));
  }
  return sig;
}

template class Tape<float>;
template class Tape<double>;
template class Tape<long double>;

}  // namespace intentgc
