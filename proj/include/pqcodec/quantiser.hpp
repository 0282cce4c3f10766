#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pqcodec/core.hpp"

namespace pqcodec {

struct NearestCodeword {
  std::uint32_t index = 0;
  std::span<const float> codeword;
  double squared_distance = 0.0;
};

/// Exhaustive squared-l2 scan; ties resolve to the lowest index.
NearestCodeword nearest_codeword(std::span<const float> subvector, const SubCodebook& book);

struct QuantiseResult {
  IndexGrid indices;
  LatentGrid z_q;
  /// Mean over all h*w*d scalars of (z_e - z_q)^2.
  double distortion = 0.0;
};

/// Quantises every pixel subspace-by-subspace. Pixels are split across
/// `workers` threads writing disjoint output ranges; results do not depend on
/// the worker count.
QuantiseResult pq_encode(const LatentGrid& z_e, const ProductCodebook& pc,
                         std::size_t workers = 1);

/// Index-only encode; skips assembling z_q.
IndexGrid pq_assign(const LatentGrid& z_e, const ProductCodebook& pc, std::size_t workers = 1);

LatentGrid pq_decode(const IndexGrid& indices, const ProductCodebook& pc);

/// Values of the two quantisation terms. Both are mean-reduced over N = h*w*d
/// and numerically equal; they differ only in which side receives gradient.
struct LossTerms {
  double codebook_loss = 0.0;    // |z_e - sg(z_q)|^2, drives the encoder
  double commitment_loss = 0.0;  // |sg(z_e) - z_q|^2, drives the codewords
  double total = 0.0;            // codebook_loss + beta * commitment_loss
};

LossTerms pq_loss(const LatentGrid& z_e, const LatentGrid& z_q, double beta);

/// d total / d z_e with z_q held fixed: 2(z_e - z_q)/N.
std::vector<double> loss_grad_latent(const LatentGrid& z_e, const LatentGrid& z_q);

/// d total / d codewords with z_e held fixed, laid out like the codebook
/// (book-major, entry-major, channel). Each codeword accumulates
/// beta * 2(z_q - z_e)/N over the positions assigned to it; unused codewords
/// get zero.
std::vector<double> loss_grad_codewords(const LatentGrid& z_e, const IndexGrid& indices,
                                        const ProductCodebook& pc);

/// Forward value of z_e + sg(z_q - z_e), which is exactly z_q.
LatentGrid straight_through(const LatentGrid& z_e, const LatentGrid& z_q);

/// Backward of straight_through with respect to z_e: the identity.
std::vector<double> straight_through_backward(std::span<const double> grad_output);

}  // namespace pqcodec
