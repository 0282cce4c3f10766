#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace pqcodec::detail {

/// Exhaustive squared-l2 nearest entry; strict < keeps the lowest index on ties.
inline std::uint32_t scan_book(const float* query, const float* entries, std::size_t size,
                               std::size_t dim, double* best_out) {
  std::uint32_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size; ++k) {
    const float* c = entries + k * dim;
    double dist = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = static_cast<double>(query[j]) - static_cast<double>(c[j]);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(k);
    }
  }
  if (best_out != nullptr) *best_out = best_dist;
  return best;
}

/// SplitMix64 finaliser, used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pqcodec::detail
