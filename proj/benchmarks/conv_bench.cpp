#include <benchmark/benchmark.h>

#include <random>
#include <span>

#include "intentgc/intentnet.hpp"

namespace {

using intentgc::Activation;
using intentgc::Tensor;

constexpr std::uint32_t kNodes = 256;
constexpr std::uint32_t kRho = 10;
constexpr std::uint32_t kL = 3;

Tensor<double> random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor<double> t(r, c);
  for (auto& v : t.values()) v = scale * gauss(rng);
  return t;
}

struct Inputs {
  Tensor<double> self, neighbors;
  explicit Inputs(std::uint32_t m, std::mt19937_64& rng)
      : self(random_tensor(rng, kNodes, m, 1.0)),
        neighbors(random_tensor(rng, std::size_t{kNodes} * kRho, m, 1.0)) {}
};

void BM_Vectorwise(benchmark::State& state) {
  const auto m = static_cast<std::uint32_t>(state.range(0));
  std::mt19937_64 rng(1);
  Inputs in(m, rng);
  const auto filter = random_tensor(rng, kL, 2, 0.5);
  const auto merge = random_tensor(rng, 1, kL, 0.5);
  for (auto _ : state) {
    const auto agg = intentgc::aggregate(in.neighbors, kRho);
    auto out = intentgc::conv_vectorwise(in.self, std::span<const Tensor<double>>(&agg, 1), filter, merge,
                                         Activation::relu);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * kNodes);
}

void BM_Bitwise(benchmark::State& state) {
  const auto m = static_cast<std::uint32_t>(state.range(0));
  std::mt19937_64 rng(1);
  Inputs in(m, rng);
  const auto w = random_tensor(rng, m, 2 * m, 1.0 / m);
  for (auto _ : state) {
    const auto agg = intentgc::aggregate(in.neighbors, kRho);
    auto out = intentgc::conv_bitwise(in.self, agg, w, Activation::relu);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * kNodes);
}

}  // namespace

BENCHMARK(BM_Vectorwise)->RangeMultiplier(2)->Range(128, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Bitwise)->RangeMultiplier(2)->Range(128, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
