#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pqcodec/core.hpp"

namespace pqcodec {

/// Orthogonal affine map fitted by PCA: project(x) = W (x - mean),
/// reconstruct(z) = W^T z + mean, with W's rows the leading principal axes.
/// Stands in for a learned encoder so codebooks can be trained on
/// d-dimensional latents of arbitrary source data.
class LinearCodec {
 public:
  LinearCodec(std::size_t source_dim, std::size_t target_dim, std::vector<double> mean,
              std::vector<double> components, std::vector<double> eigenvalues,
              std::size_t rank);

  std::size_t source_dim() const noexcept { return source_dim_; }
  std::size_t target_dim() const noexcept { return target_dim_; }
  /// Number of non-degenerate axes in W; rows past it are zero.
  std::size_t rank() const noexcept { return rank_; }
  bool rank_truncated() const noexcept { return rank_ < target_dim_; }

  std::span<const double> mean() const noexcept { return mean_; }
  /// target_dim x source_dim, row-major.
  std::span<const double> components() const noexcept { return components_; }
  /// All source_dim covariance eigenvalues, descending.
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  /// Sum of the eigenvalues past target_dim: the expected squared
  /// reconstruction error per vector.
  double tail_variance() const;
  double captured_variance_ratio() const;

  std::vector<double> project(std::span<const float> x) const;
  std::vector<double> reconstruct(std::span<const double> z) const;

  VectorDataset project(const VectorDataset& data) const;
  VectorDataset reconstruct(const VectorDataset& latents) const;

 private:
  std::size_t source_dim_;
  std::size_t target_dim_;
  std::vector<double> mean_;
  std::vector<double> components_;
  std::vector<double> eigenvalues_;
  std::size_t rank_;
};

/// Fits PCA with population covariance. Axes with eigenvalue below 1e-12 of
/// the largest are treated as degenerate and left as zero rows.
LinearCodec fit_linear_encoder(const VectorDataset& data, std::size_t target_dim);

}  // namespace pqcodec
