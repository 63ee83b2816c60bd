#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace intentgc {

/// Dense row-major real matrix. A row vector is a 1 x n tensor.
template <class Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Real fill = Real(0));
  Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data);
  Tensor(std::initializer_list<std::initializer_list<Real>> rows);

  static Tensor row_vector(std::span<const Real> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  Real& operator[](std::size_t i) noexcept { return data_[i]; }
  Real operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<Real> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }

  void fill(Real v);
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(Real s);

  template <class Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(rows_, cols_, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

/// c = a * b
template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);

/// c += a * b
template <class Real>
void matmul_add(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c);

/// c += a * b^T
template <class Real>
void matmul_add_bt(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c);

/// c += a^T * b
template <class Real>
void matmul_add_at(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c);

/// Throws ShapeError with `what` unless the predicate holds.
void require_shape(bool ok, std::string_view what);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tensor<long double>;

}  // namespace intentgc
