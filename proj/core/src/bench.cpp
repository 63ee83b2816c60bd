#include "intentgc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

BenchOptions BenchOptions::from(const Config& c) {
  BenchOptions b;
  b.m_values = c.get_u32_list("bench.m", b.m_values);
  b.rho = static_cast<std::uint32_t>(c.get_u64("rho", b.rho));
  b.L = static_cast<std::uint32_t>(c.get_u64("L", b.L));
  b.q = static_cast<std::uint32_t>(c.get_u64("q", b.q));
  b.nodes = static_cast<std::uint32_t>(c.get_u64("bench.nodes", b.nodes));
  b.reps = static_cast<std::uint32_t>(c.get_u64("bench.reps", b.reps));
  b.warmup = static_cast<std::uint32_t>(c.get_u64("bench.warmup", b.warmup));
  b.seed = c.get_u64("seed", b.seed);
  b.validate();
  return b;
}

void BenchOptions::validate() const {
  if (m_values.empty()) throw ConfigError("bench.m must list at least one width");
  for (auto m : m_values)
    if (m < 1) throw ConfigError("bench.m entries must be >= 1");
  if (rho < 1 || L < 1 || nodes < 1) throw ConfigError("rho, L and bench.nodes must be >= 1");
  if (reps < 5) throw ConfigError("bench.reps must be >= 5");
}

namespace {

template <class F>
double median_ns(const F& run, std::uint32_t reps, std::uint32_t warmup) {
  for (std::uint32_t w = 0; w < warmup; ++w) run();
  std::vector<double> times;
  for (std::uint32_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
  return times[times.size() / 2];
}

volatile double g_sink = 0;

}  // namespace

std::vector<BenchRow> bench_conv(const BenchOptions& options) {
  options.validate();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random = [&](std::size_t r, std::size_t c, double scale) {
    Tensor<double> t(r, c);
    for (auto& v : t.values()) v = scale * gauss(rng);
    return t;
  };

  std::vector<BenchRow> rows;
  for (auto m : options.m_values) {
    const Tensor<double> self = random(options.nodes, m, 1.0);
    const Tensor<double> neighbors = random(std::size_t{options.nodes} * options.rho, m, 1.0);
    const Tensor<double> filter = random(options.L, 2, 0.5);
    const Tensor<double> merge = random(1, options.L, 0.5);
    const Tensor<double> w = random(m, 2 * m, 1.0 / m);

    for (ConvMode mode : {ConvMode::vectorwise, ConvMode::bitwise}) {
      auto run = [&] {
        const Tensor<double> agg = aggregate(neighbors, options.rho);
        const Tensor<double> out = mode == ConvMode::vectorwise
                                       ? conv_vectorwise(self, std::span<const Tensor<double>>(&agg, 1), filter,
                                                         merge, Activation::relu)
                                       : conv_bitwise(self, agg, w, Activation::relu);
        g_sink = g_sink + out[0];
      };
      BenchRow row;
      row.mode = mode;
      row.m = m;
      row.median_ns = median_ns(run, options.reps, options.warmup);
      row.median_ns_per_node = row.median_ns / options.nodes;
      const FlopCount f = count_flops(mode, m, options.rho, options.L, options.q);
      row.flops_per_op = f.per_op;
      row.flops_per_node = f.conv_total;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "mode\tm\tmedian_ns_layer\tmedian_ns_per_node\tflops_per_op\tflops_per_node\n";
  for (const auto& r : rows)
    out << to_string(r.mode) << '\t' << r.m << '\t' << text::format_fixed(r.median_ns, 0) << '\t'
        << text::format_fixed(r.median_ns_per_node, 1) << '\t' << r.flops_per_op << '\t' << r.flops_per_node << '\n';
  return out.str();
}

}  // namespace intentgc
