#include "pqcodec/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace pqcodec::io {
namespace {

constexpr char kCodebookMagic[4] = {'P', 'Q', 'C', 'B'};
constexpr char kIndexMagic[4] = {'P', 'Q', 'I', 'X'};
constexpr char kDatasetMagic[4] = {'P', 'Q', 'V', 'D'};

class Writer {
 public:
  void magic(const char (&m)[4]) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void magic(const char (&m)[4]) {
    need(4);
    if (std::memcmp(bytes_.data(), m, 4) != 0) {
      fail(ErrorCode::kBadMagic, std::string(what_) + ": bad magic, expected '" +
                                     std::string(m, 4) + "'");
    }
    pos_ = 4;
  }
  void version() {
    const std::uint32_t v = u32();
    if (v != kFormatVersion) {
      fail(ErrorCode::kVersionMismatch, std::string(what_) + ": unsupported version " +
                                            std::to_string(v));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  /// Payload must be exactly `count` more bytes.
  void expect_remaining(std::uint64_t count) const {
    const std::uint64_t left = bytes_.size() - pos_;
    if (left < count) {
      fail(ErrorCode::kTruncated, std::string(what_) + ": payload truncated (" +
                                      std::to_string(left) + " of " + std::to_string(count) +
                                      " bytes)");
    }
    if (left > count) {
      fail(ErrorCode::kMalformed, std::string(what_) + ": " + std::to_string(left - count) +
                                      " trailing bytes");
    }
  }
  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) {
      fail(ErrorCode::kTruncated, std::string(what_) + ": header truncated");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

std::uint32_t checked_u32(std::size_t v, const char* field) {
  require(v <= 0xffffffffu, ErrorCode::kInvalidInput,
          std::string(field) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "read error on '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write error on '" + path.string() + "'");
}

// ---- codebooks -------------------------------------------------------------

std::vector<std::uint8_t> encode_codebook(const ProductCodebook& pc) {
  const auto& cfg = pc.config();
  Writer w;
  w.magic(kCodebookMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(cfg.d(), "d"));
  w.u32(checked_u32(cfg.subspaces(), "S"));
  w.u32(checked_u32(cfg.codebook_size(), "K"));
  w.f64(cfg.beta());
  for (const auto& book : pc.books())
    for (float v : book.entries()) w.f32(v);
  return std::move(w.bytes());
}

ProductCodebook decode_codebook(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "codebook");
  r.magic(kCodebookMagic);
  r.version();
  const std::uint32_t d = r.u32();
  const std::uint32_t s = r.u32();
  const std::uint32_t k = r.u32();
  const double beta = r.f64();
  require(d >= 1 && s >= 1 && k >= 1 && d % s == 0, ErrorCode::kMalformed,
          "codebook: invalid header d=" + std::to_string(d) + " S=" + std::to_string(s) +
              " K=" + std::to_string(k));
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::kMalformed, "codebook: invalid beta");
  const std::uint64_t sub = d / s;
  r.expect_remaining(std::uint64_t{s} * k * sub * 4);
  const PQConfig cfg(d, s, k, beta);
  std::vector<SubCodebook> books;
  books.reserve(s);
  for (std::uint32_t b = 0; b < s; ++b) {
    std::vector<float> entries(static_cast<std::size_t>(k * sub));
    for (auto& v : entries) {
      v = r.f32();
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "codebook: non-finite payload value");
    }
    books.emplace_back(k, sub, std::move(entries));
  }
  return ProductCodebook(cfg, std::move(books));
}

void write_codebook(const ProductCodebook& pc, const std::filesystem::path& path) {
  write_file(path, encode_codebook(pc));
}

ProductCodebook read_codebook(const std::filesystem::path& path) {
  return decode_codebook(read_file(path));
}

// ---- index bitstreams --------------------------------------------------------

std::uint32_t bits_per_index(std::size_t codebook_size) {
  require(codebook_size >= 1, ErrorCode::kInvalidInput, "K must be >= 1");
  if (codebook_size == 1) return 1;
  return static_cast<std::uint32_t>(std::bit_width(codebook_size - 1));
}

std::size_t index_stream_size(std::size_t h, std::size_t w, std::size_t subspaces,
                              std::size_t codebook_size) {
  const std::size_t bits = h * w * subspaces * bits_per_index(codebook_size);
  return kIndexHeaderBytes + (bits + 7) / 8;
}

std::vector<std::uint8_t> encode_indices(const IndexGrid& indices, std::size_t codebook_size) {
  require(indices.indices.size() == indices.pixels() * indices.subspaces,
          ErrorCode::kInvalidInput, "index grid payload does not match its shape");
  indices.check_range(codebook_size);
  const std::uint32_t bits = bits_per_index(codebook_size);
  Writer w;
  w.magic(kIndexMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(indices.h, "h"));
  w.u32(checked_u32(indices.w, "w"));
  w.u32(checked_u32(indices.subspaces, "S"));
  w.u32(checked_u32(codebook_size, "K"));
  w.u32(bits);
  auto& out = w.bytes();
  const std::size_t header = out.size();
  out.resize(header + (indices.indices.size() * bits + 7) / 8, 0);
  std::uint8_t* payload = out.data() + header;
  std::size_t pos = 0;
  for (std::uint32_t idx : indices.indices) {
    for (std::uint32_t b = bits; b-- > 0; ++pos) {
      if ((idx >> b) & 1u) payload[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
    }
  }
  return std::move(out);
}

PackedIndices decode_indices(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "index stream");
  r.magic(kIndexMagic);
  r.version();
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  const std::uint32_t s = r.u32();
  const std::uint32_t k = r.u32();
  const std::uint32_t bits = r.u32();
  require(s >= 1 && k >= 1, ErrorCode::kMalformed, "index stream: S and K must be >= 1");
  require(bits == bits_per_index(k), ErrorCode::kMalformed,
          "index stream: bit width " + std::to_string(bits) + " does not match K=" +
              std::to_string(k));
  const std::uint64_t count = std::uint64_t{h} * w * s;
  const std::uint64_t payload_bytes = (count * bits + 7) / 8;
  r.expect_remaining(payload_bytes);

  const auto payload = r.rest();
  PackedIndices out{IndexGrid(h, w, s), k};
  std::uint64_t pos = 0;
  for (auto& idx : out.indices.indices) {
    std::uint32_t v = 0;
    for (std::uint32_t b = 0; b < bits; ++b, ++pos) {
      v = (v << 1) | ((payload[pos / 8] >> (7 - pos % 8)) & 1u);
    }
    if (v >= k) {
      fail(ErrorCode::kMalformed, "index stream: index " + std::to_string(v) + " >= K=" +
                                      std::to_string(k));
    }
    idx = v;
  }
  for (; pos < payload_bytes * 8; ++pos) {
    if ((payload[pos / 8] >> (7 - pos % 8)) & 1u) {
      fail(ErrorCode::kMalformed, "index stream: non-zero padding bits");
    }
  }
  return out;
}

void pack_indices(const IndexGrid& indices, std::size_t codebook_size,
                  const std::filesystem::path& path) {
  write_file(path, encode_indices(indices, codebook_size));
}

PackedIndices unpack_indices(const std::filesystem::path& path) {
  return decode_indices(read_file(path));
}

// ---- vector datasets ------------------------------------------------------------

std::vector<std::uint8_t> encode_dataset(const VectorDataset& ds) {
  require(ds.data.size() == ds.n * ds.d, ErrorCode::kInvalidInput,
          "dataset payload does not match n*d");
  Writer w;
  w.magic(kDatasetMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(ds.n, "n"));
  w.u32(checked_u32(ds.d, "d"));
  for (float v : ds.data) w.f32(v);
  return std::move(w.bytes());
}

VectorDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "dataset");
  r.magic(kDatasetMagic);
  r.version();
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  r.expect_remaining(std::uint64_t{n} * d * 4);
  std::vector<float> values(static_cast<std::size_t>(n) * d);
  for (auto& v : values) {
    v = r.f32();
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "dataset: non-finite payload value");
  }
  return VectorDataset(n, d, std::move(values));
}

void write_dataset(const VectorDataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_dataset(ds));
}

VectorDataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file(path));
}

// ---- PNM images -------------------------------------------------------------------

namespace {

class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), ErrorCode::kMalformed,
            "pnm: expected a number in header");
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      require(v <= (1u << 24), ErrorCode::kMalformed, "pnm: header value too large");
    }
    return v;
  }
  /// Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorCode::kMalformed,
            "pnm: missing separator before raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image parse_pnm(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P', ErrorCode::kUnsupportedFormat,
          "not a PNM image");
  std::size_t channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    fail(ErrorCode::kUnsupportedFormat,
         std::string("unsupported PNM variant P") + static_cast<char>(bytes[1]) +
             " (only binary P5/P6)");
  }
  PnmHeader header(bytes);
  Image img;
  img.width = header.number();
  img.height = header.number();
  const std::size_t maxval = header.number();
  require(img.width > 0 && img.height > 0, ErrorCode::kMalformed, "pnm: empty image");
  require(maxval >= 1 && maxval <= 65535, ErrorCode::kMalformed, "pnm: maxval out of range");
  img.channels = channels;
  const std::size_t offset = header.raster_offset();
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t samples = img.width * img.height * channels;
  require(bytes.size() - offset >= samples * sample_bytes, ErrorCode::kTruncated,
          "pnm: raster truncated");
  img.values.resize(samples);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < samples; ++i) {
    std::size_t v = bytes[offset + i * sample_bytes];
    if (sample_bytes == 2) v = (v << 8) | bytes[offset + i * 2 + 1];  // big-endian
    img.values[i] = static_cast<float>(static_cast<double>(v) * scale);
  }
  return img;
}

Image read_pnm(const std::filesystem::path& path) { return parse_pnm(read_file(path)); }

void write_pnm(const Image& image, const std::filesystem::path& path) {
  require(image.channels == 1 || image.channels == 3, ErrorCode::kInvalidInput,
          "pnm: channels must be 1 or 3");
  require(image.values.size() == image.height * image.width * image.channels,
          ErrorCode::kInvalidInput, "pnm: payload does not match shape");
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (float v : image.values) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    bytes.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  write_file(path, bytes);
}

PatchGridShape patch_grid_shape(const Image& image, std::size_t patch, std::size_t stride) {
  require(patch >= 1 && stride >= 1, ErrorCode::kInvalidInput, "patch and stride must be >= 1");
  require(patch <= image.height && patch <= image.width, ErrorCode::kInvalidInput,
          "patch " + std::to_string(patch) + " larger than image " +
              std::to_string(image.width) + "x" + std::to_string(image.height));
  return {(image.height - patch) / stride + 1, (image.width - patch) / stride + 1};
}

VectorDataset extract_patches(const Image& image, std::size_t patch, std::size_t stride) {
  const auto shape = patch_grid_shape(image, patch, stride);
  const std::size_t c = image.channels;
  const std::size_t dim = patch * patch * c;
  std::vector<float> out;
  out.reserve(shape.rows * shape.cols * dim);
  for (std::size_t pr = 0; pr < shape.rows; ++pr) {
    for (std::size_t pc = 0; pc < shape.cols; ++pc) {
      for (std::size_t y = 0; y < patch; ++y) {
        const float* src =
            image.values.data() + ((pr * stride + y) * image.width + pc * stride) * c;
        out.insert(out.end(), src, src + patch * c);
      }
    }
  }
  return VectorDataset(shape.rows * shape.cols, dim, std::move(out));
}

}  // namespace pqcodec::io
