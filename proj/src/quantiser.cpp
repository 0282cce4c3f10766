#include "pqcodec/quantiser.hpp"

#include "scan.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace pqcodec {
namespace {

using detail::scan_book;

void check_shape(const LatentGrid& a, const LatentGrid& b) {
  require(a.h == b.h && a.w == b.w && a.d == b.d, ErrorCode::kInvalidInput,
          "latent grid shapes differ");
}

template <typename Fn>
void for_pixel_ranges(std::size_t pixels, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(pixels, 1));
  if (workers == 1) {
    fn(std::size_t{0}, pixels);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (pixels + workers - 1) / workers;
  for (std::size_t begin = 0; begin < pixels; begin += chunk) {
    pool.emplace_back([&fn, begin, end = std::min(pixels, begin + chunk)] { fn(begin, end); });
  }
}

void check_encodable(const LatentGrid& z_e, const ProductCodebook& pc) {
  require(z_e.d == pc.config().d(), ErrorCode::kInvalidInput,
          "latent d=" + std::to_string(z_e.d) + " does not match codebook d=" +
              std::to_string(pc.config().d()));
  require(z_e.data.size() == z_e.h * z_e.w * z_e.d, ErrorCode::kInvalidInput,
          "latent grid payload does not match its shape");
  require(all_finite(z_e.data), ErrorCode::kNonFinite, "latent grid has non-finite values");
}

}  // namespace

NearestCodeword nearest_codeword(std::span<const float> subvector, const SubCodebook& book) {
  require(book.size() > 0, ErrorCode::kInvalidState, "empty codebook");
  require(subvector.size() == book.dim(), ErrorCode::kInvalidInput,
          "subvector dimension does not match codebook");
  require(all_finite(subvector), ErrorCode::kNonFinite, "non-finite query");
  NearestCodeword out;
  out.index = scan_book(subvector.data(), book.entries().data(), book.size(), book.dim(),
                        &out.squared_distance);
  out.codeword = book.codeword(out.index);
  return out;
}

QuantiseResult pq_encode(const LatentGrid& z_e, const ProductCodebook& pc, std::size_t workers) {
  check_encodable(z_e, pc);
  const auto& cfg = pc.config();
  const std::size_t sub = cfg.sub_dim();
  const std::size_t nsub = cfg.subspaces();
  QuantiseResult out{IndexGrid(z_e.h, z_e.w, nsub), LatentGrid(z_e.h, z_e.w, z_e.d), 0.0};

  // Per-pixel error kept separately so the reduction order is fixed.
  std::vector<double> pixel_sse(z_e.pixels(), 0.0);
  for_pixel_ranges(z_e.pixels(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const float* px = z_e.data.data() + p * z_e.d;
      float* qx = out.z_q.data.data() + p * z_e.d;
      std::uint32_t* idx = out.indices.indices.data() + p * nsub;
      double sse = 0.0;
      for (std::size_t s = 0; s < nsub; ++s) {
        const SubCodebook& book = pc.book(s);
        double dist = 0.0;
        idx[s] = scan_book(px + s * sub, book.entries().data(), book.size(), sub, &dist);
        const auto cw = book.codeword(idx[s]);
        std::copy(cw.begin(), cw.end(), qx + s * sub);
        sse += dist;
      }
      pixel_sse[p] = sse;
    }
  });
  double total = 0.0;
  for (double v : pixel_sse) total += v;
  out.distortion = z_e.data.empty() ? 0.0 : total / static_cast<double>(z_e.data.size());
  return out;
}

IndexGrid pq_assign(const LatentGrid& z_e, const ProductCodebook& pc, std::size_t workers) {
  check_encodable(z_e, pc);
  const std::size_t sub = pc.config().sub_dim();
  const std::size_t nsub = pc.config().subspaces();
  IndexGrid out(z_e.h, z_e.w, nsub);
  for_pixel_ranges(z_e.pixels(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const float* px = z_e.data.data() + p * z_e.d;
      std::uint32_t* idx = out.indices.data() + p * nsub;
      for (std::size_t s = 0; s < nsub; ++s) {
        const SubCodebook& book = pc.book(s);
        idx[s] = scan_book(px + s * sub, book.entries().data(), book.size(), sub, nullptr);
      }
    }
  });
  return out;
}

LatentGrid pq_decode(const IndexGrid& indices, const ProductCodebook& pc) {
  const auto& cfg = pc.config();
  require(indices.subspaces == cfg.subspaces(), ErrorCode::kInvalidInput,
          "index grid S=" + std::to_string(indices.subspaces) + " does not match codebook S=" +
              std::to_string(cfg.subspaces()));
  require(indices.indices.size() == indices.pixels() * indices.subspaces,
          ErrorCode::kInvalidInput, "index grid payload does not match its shape");
  indices.check_range(cfg.codebook_size());
  const std::size_t sub = cfg.sub_dim();
  LatentGrid out(indices.h, indices.w, cfg.d());
  for (std::size_t p = 0; p < indices.pixels(); ++p) {
    const auto tuple = indices.tuple(p);
    float* dst = out.data.data() + p * cfg.d();
    for (std::size_t s = 0; s < cfg.subspaces(); ++s) {
      const auto cw = pc.book(s).codeword(tuple[s]);
      std::copy(cw.begin(), cw.end(), dst + s * sub);
    }
  }
  return out;
}

LossTerms pq_loss(const LatentGrid& z_e, const LatentGrid& z_q, double beta) {
  check_shape(z_e, z_q);
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  LossTerms out;
  if (z_e.data.empty()) return out;
  double sse = 0.0;
  for (std::size_t i = 0; i < z_e.data.size(); ++i) {
    const double diff = static_cast<double>(z_e.data[i]) - static_cast<double>(z_q.data[i]);
    sse += diff * diff;
  }
  const double mean = sse / static_cast<double>(z_e.data.size());
  out.codebook_loss = mean;
  out.commitment_loss = mean;
  out.total = out.codebook_loss + beta * out.commitment_loss;
  return out;
}

std::vector<double> loss_grad_latent(const LatentGrid& z_e, const LatentGrid& z_q) {
  check_shape(z_e, z_q);
  const double scale = z_e.data.empty() ? 0.0 : 2.0 / static_cast<double>(z_e.data.size());
  std::vector<double> grad(z_e.data.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = scale * (static_cast<double>(z_e.data[i]) - static_cast<double>(z_q.data[i]));
  }
  return grad;
}

std::vector<double> loss_grad_codewords(const LatentGrid& z_e, const IndexGrid& indices,
                                        const ProductCodebook& pc) {
  const auto& cfg = pc.config();
  require(z_e.d == cfg.d() && indices.h == z_e.h && indices.w == z_e.w &&
              indices.subspaces == cfg.subspaces(),
          ErrorCode::kInvalidInput, "latents, indices and codebook disagree in shape");
  indices.check_range(cfg.codebook_size());
  const std::size_t sub = cfg.sub_dim();
  const std::size_t book_stride = cfg.codebook_size() * sub;
  std::vector<double> grad(cfg.subspaces() * book_stride, 0.0);
  if (z_e.data.empty()) return grad;
  const double scale = cfg.beta() * 2.0 / static_cast<double>(z_e.data.size());
  for (std::size_t p = 0; p < z_e.pixels(); ++p) {
    const auto px = z_e.pixel(p);
    const auto tuple = indices.tuple(p);
    for (std::size_t s = 0; s < cfg.subspaces(); ++s) {
      const auto cw = pc.book(s).codeword(tuple[s]);
      double* g = grad.data() + s * book_stride + tuple[s] * sub;
      for (std::size_t j = 0; j < sub; ++j) {
        g[j] += scale * (static_cast<double>(cw[j]) - static_cast<double>(px[s * sub + j]));
      }
    }
  }
  return grad;
}

LatentGrid straight_through(const LatentGrid& z_e, const LatentGrid& z_q) {
  check_shape(z_e, z_q);
  return z_q;
}

std::vector<double> straight_through_backward(std::span<const double> grad_output) {
  return {grad_output.begin(), grad_output.end()};
}

}  // namespace pqcodec
