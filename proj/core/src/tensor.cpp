#include "intentgc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "intentgc/error.hpp"

namespace intentgc {

void require_shape(bool ok, std::string_view what) {
  if (!ok) throw ShapeError("shape mismatch: " + std::string(what));
}

template <class Real>
Tensor<Real>::Tensor(std::size_t rows, std::size_t cols, Real fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

template <class Real>
Tensor<Real>::Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_shape(data_.size() == rows * cols, "data length differs from rows*cols");
}

template <class Real>
Tensor<Real>::Tensor(std::initializer_list<std::initializer_list<Real>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_shape(r.size() == cols_, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <class Real>
Tensor<Real> Tensor<Real>::row_vector(std::span<const Real> values) {
  return Tensor(1, values.size(), std::vector<Real>(values.begin(), values.end()));
}

template <class Real>
void Tensor<Real>::fill(Real v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <class Real>
bool Tensor<Real>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

template <class Real>
Tensor<Real>& Tensor<Real>::operator+=(const Tensor& other) {
  require_shape(same_shape(other), "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <class Real>
Tensor<Real>& Tensor<Real>::operator*=(Real s) {
  for (auto& v : data_) v *= s;
  return *this;
}

namespace {

constexpr std::size_t kRowBlock = 32;
constexpr std::size_t kDepthBlock = 128;
constexpr std::size_t kColBlock = 256;

}  // namespace

template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_shape(a.cols() == b.rows(), "matmul inner dimensions");
  Tensor<Real> c(a.rows(), b.cols());
  matmul_add(a, b, c);
  return c;
}

template <class Real>
void matmul_add(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c) {
  require_shape(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(), "matmul_add");
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* pc = c.data();
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t j1 = std::min(n, j0 + kColBlock);
    for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
      const std::size_t p1 = std::min(k, p0 + kDepthBlock);
      for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
        const std::size_t i1 = std::min(m, i0 + kRowBlock);
        for (std::size_t i = i0; i < i1; ++i) {
          Real* crow = pc + i * n;
          for (std::size_t p = p0; p < p1; ++p) {
            const Real av = pa[i * k + p];
            if (av == Real(0)) continue;
            const Real* brow = pb + p * n;
            for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
          }
        }
      }
    }
  }
}

template <class Real>
void matmul_add_bt(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c) {
  require_shape(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
                "matmul_add_bt");
  const std::size_t k = a.cols();
  for (std::size_t j0 = 0; j0 < b.rows(); j0 += kRowBlock) {
    const std::size_t j1 = std::min(b.rows(), j0 + kRowBlock);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const Real* arow = a.data() + i * k;
      Real* crow = c.data() + i * c.cols();
      for (std::size_t j = j0; j < j1; ++j) {
        const Real* brow = b.data() + j * k;
        Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
          s0 += arow[p] * brow[p];
          s1 += arow[p + 1] * brow[p + 1];
          s2 += arow[p + 2] * brow[p + 2];
          s3 += arow[p + 3] * brow[p + 3];
        }
        for (; p < k; ++p) s0 += arow[p] * brow[p];
        crow[j] += (s0 + s1) + (s2 + s3);
      }
    }
  }
}

template <class Real>
void matmul_add_at(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c) {
  require_shape(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
                "matmul_add_at");
  const std::size_t n = b.cols();
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const Real* arow = a.data() + p * a.cols();
    const Real* brow = b.data() + p * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const Real av = arow[i];
      if (av == Real(0)) continue;
      Real* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tensor<long double>;
template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);
template void matmul_add(const Tensor<float>&, const Tensor<float>&, Tensor<float>&);
template void matmul_add(const Tensor<double>&, const Tensor<double>&, Tensor<double>&);
template void matmul_add_bt(const Tensor<float>&, const Tensor<float>&, Tensor<float>&);
template void matmul_add_bt(const Tensor<double>&, const Tensor<double>&, Tensor<double>&);
template void matmul_add_at(const Tensor<float>&, const Tensor<float>&, Tensor<float>&);
template void matmul_add_at(const Tensor<double>&, const Tensor<double>&, Tensor<double>&);
// extended precision, used by the finite-difference reference in grad_check
template Tensor<long double> matmul(const Tensor<long double>&, const Tensor<long double>&);
template void matmul_add(const Tensor<long double>&, const Tensor<long double>&, Tensor<long double>&);
template void matmul_add_bt(const Tensor<long double>&, const Tensor<long double>&, Tensor<long double>&);
template void matmul_add_at(const Tensor<long double>&, const Tensor<long double>&, Tensor<long double>&);

}  // namespace intentgc
