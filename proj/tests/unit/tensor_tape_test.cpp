#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "intentgc/error.hpp"
#include "intentgc/grad_check.hpp"
#include "intentgc/tape.hpp"
#include "intentgc/tensor.hpp"

using namespace intentgc;

namespace {

Tensor<double> random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor<double> t(r, c);
  for (auto& v : t.values()) v = g(rng);
  return t;
}

// triple loop, no blocking
Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Tensor<double> transpose(const Tensor<double>& a) {
  Tensor<double> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void expect_near(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

}  // namespace

TEST(Tensor, MatmulMatchesNaiveProduct) {
  std::mt19937_64 rng(7);
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 5, 2}, {37, 300, 260}, {64, 1, 9}}) {
    auto a = random_tensor(rng, m, k), b = random_tensor(rng, k, n);
    expect_near(matmul(a, b), naive_matmul(a, b), 1e-10);
  }
}

TEST(Tensor, TransposedKernelsMatchNaiveProduct) {
  std::mt19937_64 rng(8);
  auto a = random_tensor(rng, 13, 40), b = random_tensor(rng, 21, 40);
  Tensor<double> c(13, 21, 1.0);
  matmul_add_bt(a, b, c);
  auto expect = naive_matmul(a, transpose(b));
  for (auto& v : expect.values()) v += 1.0;
  expect_near(c, expect, 1e-10);

  auto x = random_tensor(rng, 17, 6), y = random_tensor(rng, 17, 4);
  Tensor<double> d(6, 4);
  matmul_add_at(x, y, d);
  expect_near(d, naive_matmul(transpose(x), y), 1e-10);
}

TEST(Tensor, ShapeMismatchThrows) {
  Tensor<double> a(2, 3), b(2, 3);
  EXPECT_THROW(matmul(a, b), ShapeError);
}

TEST(Tape, ValueUsedTwiceAccumulatesBothBranches) {
  Tensor<double> x{{3.0}};
  Tensor<double> gx(1, 1);
  Tape<double> t;
  Var v = t.leaf(x, &gx);
  Var y = t.add(t.scale(v, 2.0), t.row_dot(v, v));  // 2x + x^2
  t.backward(y);
  EXPECT_DOUBLE_EQ(gx[0], 2.0 + 2 * 3.0);
}

TEST(Tape, NonFiniteForwardThrows) {
  Tensor<double> x{{1e308, 1e308}};
  Tape<double> t;
  Var v = t.leaf(x, nullptr);
  EXPECT_THROW(t.scale(v, 10.0), NumericError);
  Tensor<double> bad{{std::nan("")}};
  EXPECT_THROW(t.leaf(bad, nullptr), NumericError);
}

TEST(Tape, InputsReceiveNoGradient) {
  Tensor<double> x{{1.0, 2.0}};
  Tape<double> t;
  Var v = t.input(x);
  Var s = t.sum_all(v);
  t.backward(s);
  EXPECT_TRUE(t.grad(v).empty());
}

// Every primitive against central differences, through a smooth head so the
// scalar depends on every output element.
class TapeGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{11};

  void check(const std::vector<Tensor<double>*>& params, const ScalarFunction& body) {
    ScalarFunction f = [&](Tape<double>& t, const std::vector<Var>& p) {
      Var out = body(t, p);
      const auto& v = t.value(out);
      Tensor<double> w(v.rows(), v.cols());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
      Var wv = t.constant(w);
      return t.sum_all(t.activation(t.add(out, wv), Activation::tanh));
    };
    const auto report = grad_check(f, params, 1e-6, 1e-6);
    EXPECT_TRUE(report.ok()) << "max rel error " << report.max_rel_error;
    EXPECT_GT(report.checked, 0u);
  }
};

TEST_F(TapeGradient, Matmul) {
  auto a = random_tensor(rng, 3, 4), b = random_tensor(rng, 4, 2);
  check({&a, &b}, [](Tape<double>& t, const std::vector<Var>& p) { return t.matmul(p[0], p[1]); });
}

TEST_F(TapeGradient, MatmulTransposed) {
  auto a = random_tensor(rng, 3, 4), b = random_tensor(rng, 5, 4);
  check({&a, &b}, [](Tape<double>& t, const std::vector<Var>& p) { return t.matmul_bt(p[0], p[1]); });
}

TEST_F(TapeGradient, ElementwiseAndBroadcast) {
  auto a = random_tensor(rng, 3, 4), b = random_tensor(rng, 3, 4), bias = random_tensor(rng, 1, 4);
  auto s = random_tensor(rng, 1, 1);
  check({&a, &b, &bias, &s}, [](Tape<double>& t, const std::vector<Var>& p) {
    return t.scale(t.add_row(t.sub(t.add(p[0], p[1]), t.activation(p[1], Activation::tanh)), p[2]), p[3]);
  });
}

TEST_F(TapeGradient, WeightedSumAndConcat) {
  auto x = random_tensor(rng, 2, 3), y = random_tensor(rng, 2, 3), z = random_tensor(rng, 2, 3);
  auto w = random_tensor(rng, 2, 3);
  check({&x, &y, &z, &w}, [](Tape<double>& t, const std::vector<Var>& p) {
    const Var xs[3] = {p[0], p[1], p[2]};
    const Var parts[2] = {t.weighted_sum(xs, p[3], 1), p[0]};
    return t.concat_cols(parts);
  });
}

TEST_F(TapeGradient, RowReductions) {
  auto x = random_tensor(rng, 6, 3);
  check({&x}, [](Tape<double>& t, const std::vector<Var>& p) {
    const Var a[2] = {t.mean_rows(p[0], 3), t.slice_rows(p[0], 1, 2)};
    const Var b[2] = {t.weighted_mean_rows(p[0], 3, {1, 3, 0, 0, 0, 0}), t.gather_rows(p[0], {5, 0})};
    return t.add(t.concat_cols(a), t.concat_cols(b));
  });
}

TEST_F(TapeGradient, ActivationsAndLossHead) {
  auto a = random_tensor(rng, 4, 3), b = random_tensor(rng, 4, 3);
  check({&a, &b}, [](Tape<double>& t, const std::vector<Var>& p) {
    Var r = t.activation(p[0], Activation::relu);
    Var h = t.hinge(t.add_scalar(t.row_dot(r, p[1]), 0.5));
    return t.mean_all(t.add(h, t.row_dot(t.activation(p[1], Activation::tanh), p[0])));
  });
}

TEST_F(TapeGradient, EmbeddingMean) {
  auto table = random_tensor(rng, 5, 3);
  check({&table}, [](Tape<double>& t, const std::vector<Var>& p) {
    return t.embedding_mean(p[0], {{0, 2}, {}, {4}, {1, 1, 3}});
  });
}

TEST(Tape, WeightedMeanFallsBackToPlainMean) {
  Tensor<double> x{{1.0}, {3.0}, {5.0}, {7.0}};
  Tape<double> t;
  Var v = t.input(x);
  const auto& out = t.value(t.weighted_mean_rows(v, 2, {0, 0, 1, 3}));
  EXPECT_DOUBLE_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], (5.0 + 21.0) / 4.0);
}

TEST(Tape, KinkSignatureTracksReluInputs) {
  Tensor<double> x{{-1.0, 2.0}};
  Tape<double> t;
  t.activation(t.input(x), Activation::relu);
  EXPECT_EQ(t.kink_signature(), (std::vector<bool>{false, true}));
}
