#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intentgc/config.hpp"
#include "intentgc/intentnet.hpp"

namespace intentgc {

struct BenchOptions {
  std::vector<std::uint32_t> m_values{128, 256, 512};
  std::uint32_t rho = 10;
  std::uint32_t L = 3;
  std::uint32_t q = 2;
  std::uint32_t nodes = 256;  ///< rows per timed layer call
  std::uint32_t reps = 9;
  std::uint32_t warmup = 2;
  std::uint64_t seed = 1;

  static BenchOptions from(const Config& config);
  void validate() const;
};

struct BenchRow {
  ConvMode mode = ConvMode::vectorwise;
  std::uint32_t m = 0;
  double median_ns = 0;           ///< one layer over `nodes` rows, aggregation included
  double median_ns_per_node = 0;
  std::uint64_t flops_per_op = 0;
  std::uint64_t flops_per_node = 0;  ///< conv part of count_flops for q layers
};

/// Times one conv layer of each mode (single relation type) on random
/// 64-bit data for every m; median of reps after warmup runs.
std::vector<BenchRow> bench_conv(const BenchOptions& options);

/// Tab-separated table with a header line.
std::string format_bench_table(const std::vector<BenchRow>& rows);

}  // namespace intentgc
