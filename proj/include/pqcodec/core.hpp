#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pqcodec/error.hpp"

namespace pqcodec {

/// Subspace layout of a product quantiser: d channels cut into S contiguous
/// blocks of d/S channels, each with its own K-entry codebook.
/// S == 1 is plain vector quantisation, S == d is scalar quantisation.
class PQConfig {
 public:
  /// Throws kInvalidInput unless d, S, K >= 1, d % S == 0 and beta >= 0.
  PQConfig(std::size_t d, std::size_t subspaces, std::size_t codebook_size,
           double beta = 0.25);

  std::size_t d() const noexcept { return d_; }
  std::size_t subspaces() const noexcept { return subspaces_; }
  std::size_t codebook_size() const noexcept { return codebook_size_; }
  std::size_t sub_dim() const noexcept { return d_ / subspaces_; }
  double beta() const noexcept { return beta_; }

  bool is_vector_quantiser() const noexcept { return subspaces_ == 1; }
  bool is_scalar_quantiser() const noexcept { return subspaces_ == d_; }

  friend bool operator==(const PQConfig&, const PQConfig&) = default;

 private:
  std::size_t d_;
  std::size_t subspaces_;
  std::size_t codebook_size_;
  double beta_;
};

/// K codewords of dimension sub_dim, stored entry-major.
class SubCodebook {
 public:
  SubCodebook() = default;
  SubCodebook(std::size_t size, std::size_t dim, std::vector<float> entries);

  std::size_t size() const noexcept { return size_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> codeword(std::size_t k) const {
    return {entries_.data() + k * dim_, dim_};
  }
  std::span<float> codeword(std::size_t k) { return {entries_.data() + k * dim_, dim_}; }

  std::span<const float> entries() const noexcept { return entries_; }
  std::span<float> entries() noexcept { return entries_; }

  friend bool operator==(const SubCodebook&, const SubCodebook&) = default;

 private:
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> entries_;
};

class ProductCodebook {
 public:
  /// Validates S books of K entries of d/S finite values each.
  ProductCodebook(PQConfig config, std::vector<SubCodebook> books);

  /// All codewords zero.
  static ProductCodebook zeros(const PQConfig& config);

  const PQConfig& config() const noexcept { return config_; }
  const SubCodebook& book(std::size_t s) const { return books_[s]; }
  SubCodebook& book(std::size_t s) { return books_[s]; }
  const std::vector<SubCodebook>& books() const noexcept { return books_; }

  /// Size of the implicit joint codebook, K^S. Never materialised.
  boost::multiprecision::cpp_int fictive_size() const;

  friend bool operator==(const ProductCodebook&, const ProductCodebook&) = default;

 private:
  PQConfig config_;
  std::vector<SubCodebook> books_;
};

/// h x w field of d-dimensional latent pixels, pixel-major and channel-minor.
struct LatentGrid {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t d = 0;
  std::vector<float> data;

  LatentGrid() = default;
  LatentGrid(std::size_t rows, std::size_t cols, std::size_t channels);
  LatentGrid(std::size_t rows, std::size_t cols, std::size_t channels,
             std::vector<float> values);

  std::size_t pixels() const noexcept { return h * w; }
  std::span<const float> pixel(std::size_t i) const { return {data.data() + i * d, d}; }
  std::span<float> pixel(std::size_t i) { return {data.data() + i * d, d}; }

  friend bool operator==(const LatentGrid&, const LatentGrid&) = default;
};

/// h x w field of S-tuples of codeword indices, pixel-major then subspace.
struct IndexGrid {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t subspaces = 0;
  std::vector<std::uint32_t> indices;

  IndexGrid() = default;
  IndexGrid(std::size_t rows, std::size_t cols, std::size_t s);
  IndexGrid(std::size_t rows, std::size_t cols, std::size_t s,
            std::vector<std::uint32_t> values);

  std::size_t pixels() const noexcept { return h * w; }
  std::span<const std::uint32_t> tuple(std::size_t i) const {
    return {indices.data() + i * subspaces, subspaces};
  }
  std::span<std::uint32_t> tuple(std::size_t i) {
    return {indices.data() + i * subspaces, subspaces};
  }

  /// Throws kInvalidInput if any index is >= codebook_size.
  void check_range(std::size_t codebook_size) const;

  friend bool operator==(const IndexGrid&, const IndexGrid&) = default;
};

/// n row vectors of dimension d.
struct VectorDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;

  VectorDataset() = default;
  VectorDataset(std::size_t rows, std::size_t dim);
  VectorDataset(std::size_t rows, std::size_t dim, std::vector<float> values);

  std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * d, d}; }

  friend bool operator==(const VectorDataset&, const VectorDataset&) = default;
};

/// Reinterprets rows as an h x w grid; n must equal h * w.
LatentGrid as_grid(const VectorDataset& ds, std::size_t h, std::size_t w);
VectorDataset as_dataset(const LatentGrid& grid);

bool all_finite(std::span<const float> values) noexcept;

/// Subspace s receives channels [s*d/S, (s+1)*d/S).
std::vector<std::vector<float>> split_pixel(std::span<const float> pixel,
                                            const PQConfig& config);

/// Inverse of split_pixel. Throws kInvalidInput on ragged parts.
std::vector<float> join_subvectors(const std::vector<std::vector<float>>& parts);

using FictiveCode = boost::multiprecision::cpp_int;

/// Mixed-radix base-K code of an index tuple; subspace 0 is most significant.
FictiveCode fictive_index(std::span<const std::uint32_t> indices,
                          std::size_t codebook_size);

std::vector<std::uint32_t> unfictive_index(const FictiveCode& code,
                                           const PQConfig& config);

}  // namespace pqcodec
