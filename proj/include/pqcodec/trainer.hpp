#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pqcodec/core.hpp"
#include "pqcodec/diagnostics.hpp"

namespace pqcodec {

enum class TrainMode {
  kBatchKMeans,     // Lloyd step: each codeword moves to the mean of its cell
  kSgdCommitment,   // gradient step on beta * |sg(z_e) - z_q|^2 over a minibatch
};

std::string_view to_string(TrainMode mode);
/// Accepts "batch-kmeans" and "sgd-commitment".
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
  std::size_t iterations = 25;
  std::size_t batch_size = 256;
  double learning_rate = 1.0;
  TrainMode mode = TrainMode::kBatchKMeans;
  std::uint64_t seed = 0;
  /// Codewords assigned fewer times than this in an epoch are re-seeded from
  /// random data subvectors. 0 disables revival; 1 revives dead codewords only
  /// and keeps Lloyd iterations monotone.
  std::size_t revival_threshold = 1;
  /// Sub-codebooks are independent and train concurrently on this many threads.
  std::size_t workers = 1;

  void validate() const;
};

struct TrainReport {
  /// Distortion (per-scalar MSE) of the assignment pass that opens each
  /// iteration. Batch mode measures the full dataset, SGD mode the minibatch.
  std::vector<double> distortion_trace;
  /// Full-dataset distortion of the returned codebook.
  double final_distortion = 0.0;
  std::vector<UsageStats> usage;
  std::vector<std::size_t> revived;
};

struct InitReport {
  /// Per subspace: codewords filled with jittered copies because the data had
  /// fewer than K distinct subvectors.
  std::vector<std::size_t> padded;

  bool any_padded() const;
};

/// k-means++ seeding on each subspace slice. Deterministic given seed.
ProductCodebook init_codebooks(const VectorDataset& data, const PQConfig& config,
                               std::uint64_t seed, InitReport* report = nullptr);

struct TrainResult {
  ProductCodebook codebook;
  TrainReport report;
};

TrainResult train_codebooks(const VectorDataset& data, ProductCodebook pc,
                            const TrainConfig& tc);

}  // namespace pqcodec
