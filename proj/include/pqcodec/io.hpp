#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pqcodec/core.hpp"

namespace pqcodec::io {

inline constexpr std::uint32_t kFormatVersion = 1;

// PQCB: magic, version, d, S, K (u32), beta (f64), then S*K*(d/S) f32,
// book-major, entry-major, channel order. Everything little-endian.
std::vector<std::uint8_t> encode_codebook(const ProductCodebook& pc);
ProductCodebook decode_codebook(std::span<const std::uint8_t> bytes);
void write_codebook(const ProductCodebook& pc, const std::filesystem::path& path);
ProductCodebook read_codebook(const std::filesystem::path& path);

// PQIX: magic, version, h, w, S, K, bits (u32), then h*w*S indices of `bits`
// width, pixel-major then subspace, most-significant bit first, last byte
// zero-padded.
inline constexpr std::size_t kIndexHeaderBytes = 28;

/// ceil(log2 K), and 1 when K == 1.
std::uint32_t bits_per_index(std::size_t codebook_size);
/// Exact file size: 28 + ceil(h*w*S*bits / 8).
std::size_t index_stream_size(std::size_t h, std::size_t w, std::size_t subspaces,
                              std::size_t codebook_size);

struct PackedIndices {
  IndexGrid indices;
  std::size_t codebook_size = 0;
};

std::vector<std::uint8_t> encode_indices(const IndexGrid& indices, std::size_t codebook_size);
PackedIndices decode_indices(std::span<const std::uint8_t> bytes);
void pack_indices(const IndexGrid& indices, std::size_t codebook_size,
                  const std::filesystem::path& path);
PackedIndices unpack_indices(const std::filesystem::path& path);

// PQVD: magic, version, n, d (u32), then n*d f32 row-major.
std::vector<std::uint8_t> encode_dataset(const VectorDataset& ds);
VectorDataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const VectorDataset& ds, const std::filesystem::path& path);
VectorDataset read_dataset(const std::filesystem::path& path);

/// Whole-file helpers; failures throw kIo naming the path.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Binary PNM image with samples scaled to [0, 1], row-major, channels
/// interleaved.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;  // 1 for P5, 3 for P6
  std::vector<float> values;
};

Image parse_pnm(std::span<const std::uint8_t> bytes);
Image read_pnm(const std::filesystem::path& path);
/// Writes 8-bit P5/P6; values are clamped to [0, 1] and rounded.
void write_pnm(const Image& image, const std::filesystem::path& path);

struct PatchGridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

PatchGridShape patch_grid_shape(const Image& image, std::size_t patch, std::size_t stride);

/// Raster-ordered patch x patch windows, each flattened row-major with
/// channels interleaved (dimension patch*patch*channels).
VectorDataset extract_patches(const Image& image, std::size_t patch, std::size_t stride);

}  // namespace pqcodec::io
