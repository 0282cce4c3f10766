#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pqcodec/core.hpp"

namespace pqcodec::bench {

struct BenchConfig {
  std::size_t d = 0;
  std::size_t subspaces = 0;
  std::size_t codebook_size = 0;
};

struct BenchOptions {
  std::size_t h = 32;
  std::size_t w = 32;
  std::size_t warmup = 2;
  std::size_t reps = 9;
  std::uint64_t seed = 1;
  /// > 1 additionally times a multi-threaded encode. Reported as a speedup
  /// only; never part of the per-config medians.
  std::size_t parallel_workers = 1;

  void validate() const;
};

struct BenchRecord {
  BenchConfig config;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t warmup = 0;
  std::size_t reps = 0;
  double match_ms_median = 0.0;
  double decode_ms_median = 0.0;
  std::vector<double> match_samples_ms;
  std::vector<double> decode_samples_ms;
  /// Exhaustive-scan work model: K * d multiply-adds per pixel, whatever S is.
  double model_macs_per_pixel = 0.0;
  double parallel_match_ms_median = 0.0;  // 0 when not measured
};

/// Times encode (matching) and decode (lookup) per config on synthetic
/// latents. Latents depend only on (seed, d), so configs that share d see the
/// same data.
std::vector<BenchRecord> bench_matching(const std::vector<BenchConfig>& configs,
                                        const BenchOptions& options);

/// Header: d,S,K,h,w,match_ms_median,decode_ms_median,sample_0..sample_{n-1}
/// where samples are the raw encode times in ms.
std::string bench_to_csv(const std::vector<BenchRecord>& records);

/// Side-by-side view of measured scaling and the work model: time relative to
/// the smallest S at fixed (d, K) and to the smallest K at fixed (d, S).
struct ScalingRow {
  BenchConfig config;
  double measured_ratio = 0.0;
  double model_ratio = 0.0;
};

struct ScalingSummary {
  std::vector<ScalingRow> subspace_overhead;
  std::vector<ScalingRow> codebook_scaling;
};

ScalingSummary summarise_scaling(const std::vector<BenchRecord>& records);
std::string scaling_to_json(const ScalingSummary& summary);

/// Median encode time ratio between a (h, 2w) grid and an (h, w) grid.
double grid_doubling_ratio(const BenchConfig& config, const BenchOptions& options);

struct BenchPlan {
  std::vector<BenchConfig> configs;
  BenchOptions options;
};

/// {"configs":[{"d":..,"S":..,"K":..}], "h":.., "w":.., "warmup":.., "reps":..,
///  "seed":.., "parallel_workers":..}
BenchPlan parse_bench_plan(std::string_view json_text);

}  // namespace pqcodec::bench
