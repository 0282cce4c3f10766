#include "pqcodec/diagnostics.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace pqcodec {

UsageStats usage_from_counts(std::span<const std::uint64_t> counts) {
  require(!counts.empty(), ErrorCode::kInvalidInput, "K must be >= 1");
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  require(total > 0, ErrorCode::kInvalidInput, "no codeword assignments to summarise");

  UsageStats st;
  st.counts.assign(counts.begin(), counts.end());
  st.p.resize(counts.size());
  double h = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double pk = static_cast<double>(counts[k]) / static_cast<double>(total);
    st.p[k] = pk;
    if (pk > 0.0) h -= pk * std::log(pk);  // 0 log 0 := 0
  }
  const double k = static_cast<double>(counts.size());
  st.entropy = h;
  st.normalised_entropy = counts.size() == 1 ? 1.0 : h / std::log(k);
  st.perplexity = std::exp(h);
  st.normalised_perplexity = st.perplexity / k;
  return st;
}

std::vector<UsageStats> usage_stats(const IndexGrid& indices, std::size_t codebook_size) {
  require(indices.pixels() > 0 && indices.subspaces > 0, ErrorCode::kInvalidInput,
          "empty index grid");
  indices.check_range(codebook_size);
  std::vector<std::vector<std::uint64_t>> counts(
      indices.subspaces, std::vector<std::uint64_t>(codebook_size, 0));
  for (std::size_t p = 0; p < indices.pixels(); ++p) {
    const auto t = indices.tuple(p);
    for (std::size_t s = 0; s < indices.subspaces; ++s) ++counts[s][t[s]];
  }
  std::vector<UsageStats> out;
  out.reserve(indices.subspaces);
  for (const auto& c : counts) out.push_back(usage_from_counts(c));
  return out;
}

double mean_normalised_entropy(const std::vector<UsageStats>& stats) {
  if (stats.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : stats) sum += s.normalised_entropy;
  return sum / static_cast<double>(stats.size());
}

double mean_normalised_perplexity(const std::vector<UsageStats>& stats) {
  if (stats.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : stats) sum += s.normalised_perplexity;
  return sum / static_cast<double>(stats.size());
}

double mse(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), ErrorCode::kInvalidInput,
          "shape mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) return 0.0;
  // Neumaier summation.
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    const double term = diff * diff;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return (sum + comp) / static_cast<double>(a.size());
}

double mse(const LatentGrid& a, const LatentGrid& b) {
  require(a.h == b.h && a.w == b.w && a.d == b.d, ErrorCode::kInvalidInput,
          "latent grid shapes differ");
  return mse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double psnr_from_mse(double mean_squared_error, double peak) {
  require(peak > 0.0 && std::isfinite(peak), ErrorCode::kInvalidInput, "peak must be > 0");
  require(mean_squared_error >= 0.0, ErrorCode::kInvalidInput, "MSE must be >= 0");
  if (mean_squared_error == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mean_squared_error);
}

double psnr(std::span<const float> reference, std::span<const float> reconstruction,
            double peak) {
  return psnr_from_mse(mse(reference, reconstruction), peak);
}

}  // namespace pqcodec
