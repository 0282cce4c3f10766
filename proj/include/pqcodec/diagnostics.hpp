#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pqcodec/core.hpp"

namespace pqcodec {

/// Empirical codeword distribution of one subspace.
struct UsageStats {
  std::vector<std::uint64_t> counts;
  std::vector<double> p;
  double entropy = 0.0;                 // H, nats
  double normalised_entropy = 0.0;      // H / ln K; 1 when K == 1
  double perplexity = 1.0;              // exp(H)
  double normalised_perplexity = 1.0;   // exp(H) / K
};

/// Throws kInvalidInput when every count is zero.
UsageStats usage_from_counts(std::span<const std::uint64_t> counts);

/// One UsageStats per subspace, tallied independently.
std::vector<UsageStats> usage_stats(const IndexGrid& indices, std::size_t codebook_size);

double mean_normalised_entropy(const std::vector<UsageStats>& stats);
double mean_normalised_perplexity(const std::vector<UsageStats>& stats);

/// Mean squared difference, accumulated with compensated summation.
double mse(std::span<const float> a, std::span<const float> b);
double mse(const LatentGrid& a, const LatentGrid& b);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); kInfinitePsnr when the inputs are identical.
double psnr(std::span<const float> reference, std::span<const float> reconstruction,
            double peak);
double psnr_from_mse(double mean_squared_error, double peak);

}  // namespace pqcodec
