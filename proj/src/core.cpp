#include "pqcodec/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pqcodec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kInvalidState: return "invalid state";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
  }
  return "unknown";
}

PQConfig::PQConfig(std::size_t d, std::size_t subspaces, std::size_t codebook_size,
                   double beta)
    : d_(d), subspaces_(subspaces), codebook_size_(codebook_size), beta_(beta) {
  require(d >= 1, ErrorCode::kInvalidInput, "d must be >= 1");
  require(subspaces >= 1, ErrorCode::kInvalidInput, "S must be >= 1");
  require(codebook_size >= 1, ErrorCode::kInvalidInput, "K must be >= 1");
  require(d % subspaces == 0, ErrorCode::kInvalidInput,
          "S=" + std::to_string(subspaces) + " does not divide d=" + std::to_string(d));
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::kInvalidInput,
          "beta must be finite and >= 0");
}

SubCodebook::SubCodebook(std::size_t size, std::size_t dim, std::vector<float> entries)
    : size_(size), dim_(dim), entries_(std::move(entries)) {
  require(entries_.size() == size * dim, ErrorCode::kInvalidInput,
          "sub-codebook payload does not match K * sub_dim");
  require(all_finite(entries_), ErrorCode::kNonFinite, "sub-codebook has non-finite entries");
}

ProductCodebook::ProductCodebook(PQConfig config, std::vector<SubCodebook> books)
    : config_(config), books_(std::move(books)) {
  require(books_.size() == config_.subspaces(), ErrorCode::kInvalidInput,
          "expected one sub-codebook per subspace");
  for (const auto& b : books_) {
    require(b.size() == config_.codebook_size() && b.dim() == config_.sub_dim(),
            ErrorCode::kInvalidInput, "sub-codebook shape does not match config");
  }
}

ProductCodebook ProductCodebook::zeros(const PQConfig& config) {
  std::vector<SubCodebook> books;
  books.reserve(config.subspaces());
  for (std::size_t s = 0; s < config.subspaces(); ++s) {
    books.emplace_back(config.codebook_size(), config.sub_dim(),
                       std::vector<float>(config.codebook_size() * config.sub_dim(), 0.0f));
  }
  return ProductCodebook(config, std::move(books));
}

boost::multiprecision::cpp_int ProductCodebook::fictive_size() const {
  return boost::multiprecision::pow(boost::multiprecision::cpp_int(config_.codebook_size()),
                                    static_cast<unsigned>(config_.subspaces()));
}

LatentGrid::LatentGrid(std::size_t rows, std::size_t cols, std::size_t channels)
    : h(rows), w(cols), d(channels), data(rows * cols * channels, 0.0f) {}

LatentGrid::LatentGrid(std::size_t rows, std::size_t cols, std::size_t channels,
                       std::vector<float> values)
    : h(rows), w(cols), d(channels), data(std::move(values)) {
  require(data.size() == h * w * d, ErrorCode::kInvalidInput,
          "latent grid payload does not match h*w*d");
  require(all_finite(data), ErrorCode::kNonFinite, "latent grid has non-finite values");
}

IndexGrid::IndexGrid(std::size_t rows, std::size_t cols, std::size_t s)
    : h(rows), w(cols), subspaces(s), indices(rows * cols * s, 0u) {}

IndexGrid::IndexGrid(std::size_t rows, std::size_t cols, std::size_t s,
                     std::vector<std::uint32_t> values)
    : h(rows), w(cols), subspaces(s), indices(std::move(values)) {
  require(indices.size() == h * w * subspaces, ErrorCode::kInvalidInput,
          "index grid payload does not match h*w*S");
}

void IndexGrid::check_range(std::size_t codebook_size) const {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= codebook_size) {
      fail(ErrorCode::kInvalidInput, "index " + std::to_string(indices[i]) + " at position " +
                                         std::to_string(i) + " is >= K=" +
                                         std::to_string(codebook_size));
    }
  }
}

VectorDataset::VectorDataset(std::size_t rows, std::size_t dim)
    : n(rows), d(dim), data(rows * dim, 0.0f) {}

VectorDataset::VectorDataset(std::size_t rows, std::size_t dim, std::vector<float> values)
    : n(rows), d(dim), data(std::move(values)) {
  require(data.size() == n * d, ErrorCode::kInvalidInput, "dataset payload does not match n*d");
}

LatentGrid as_grid(const VectorDataset& ds, std::size_t h, std::size_t w) {
  require(h * w == ds.n, ErrorCode::kInvalidInput,
          "grid " + std::to_string(h) + "x" + std::to_string(w) + " does not cover " +
              std::to_string(ds.n) + " rows");
  return LatentGrid(h, w, ds.d, ds.data);
}

VectorDataset as_dataset(const LatentGrid& grid) {
  return VectorDataset(grid.pixels(), grid.d, grid.data);
}

bool all_finite(std::span<const float> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

std::vector<std::vector<float>> split_pixel(std::span<const float> pixel,
                                            const PQConfig& config) {
  require(pixel.size() == config.d(), ErrorCode::kInvalidInput,
          "pixel has " + std::to_string(pixel.size()) + " channels, expected " +
              std::to_string(config.d()));
  const std::size_t sub = config.sub_dim();
  std::vector<std::vector<float>> parts;
  parts.reserve(config.subspaces());
  for (std::size_t s = 0; s < config.subspaces(); ++s) {
    auto first = pixel.begin() + static_cast<std::ptrdiff_t>(s * sub);
    parts.emplace_back(first, first + static_cast<std::ptrdiff_t>(sub));
  }
  return parts;
}

std::vector<float> join_subvectors(const std::vector<std::vector<float>>& parts) {
  require(!parts.empty(), ErrorCode::kInvalidInput, "no subvectors to join");
  const std::size_t sub = parts.front().size();
  std::vector<float> out;
  out.reserve(sub * parts.size());
  for (const auto& p : parts) {
    require(p.size() == sub, ErrorCode::kInvalidInput, "ragged subvectors");
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

FictiveCode fictive_index(std::span<const std::uint32_t> indices, std::size_t codebook_size) {
  require(codebook_size >= 1, ErrorCode::kInvalidInput, "K must be >= 1");
  FictiveCode code = 0;
  for (std::uint32_t idx : indices) {
    require(idx < codebook_size, ErrorCode::kInvalidInput,
            "index " + std::to_string(idx) + " >= K=" + std::to_string(codebook_size));
    code *= codebook_size;
    code += idx;
  }
  return code;
}

std::vector<std::uint32_t> unfictive_index(const FictiveCode& code, const PQConfig& config) {
  const std::size_t k = config.codebook_size();
  const FictiveCode limit =
      boost::multiprecision::pow(FictiveCode(k), static_cast<unsigned>(config.subspaces()));
  require(code >= 0 && code < limit, ErrorCode::kInvalidInput, "fictive code out of range");
  std::vector<std::uint32_t> out(config.subspaces());
  FictiveCode rest = code;
  for (std::size_t s = config.subspaces(); s-- > 0;) {
    out[s] = static_cast<std::uint32_t>(rest % k);
    rest /= k;
  }
  return out;
}

}  // namespace pqcodec
