#include "pqcodec/linear_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace pqcodec {

LinearCodec::LinearCodec(std::size_t source_dim, std::size_t target_dim,
                         std::vector<double> mean, std::vector<double> components,
                         std::vector<double> eigenvalues, std::size_t rank)
    : source_dim_(source_dim),
      target_dim_(target_dim),
      mean_(std::move(mean)),
      components_(std::move(components)),
      eigenvalues_(std::move(eigenvalues)),
      rank_(rank) {
  require(target_dim_ >= 1 && target_dim_ <= source_dim_, ErrorCode::kInvalidInput,
          "target dimension must be in [1, source dimension]");
  require(mean_.size() == source_dim_ && components_.size() == target_dim_ * source_dim_ &&
              eigenvalues_.size() == source_dim_ && rank_ <= target_dim_,
          ErrorCode::kInvalidInput, "inconsistent linear codec");
}

double LinearCodec::tail_variance() const {
  double tail = 0.0;
  for (std::size_t i = target_dim_; i < eigenvalues_.size(); ++i) tail += eigenvalues_[i];
  return tail;
}

double LinearCodec::captured_variance_ratio() const {
  double total = 0.0;
  double head = 0.0;
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    total += eigenvalues_[i];
    if (i < target_dim_) head += eigenvalues_[i];
  }
  return total > 0.0 ? head / total : 1.0;
}

std::vector<double> LinearCodec::project(std::span<const float> x) const {
  require(x.size() == source_dim_, ErrorCode::kInvalidInput, "vector dimension mismatch");
  std::vector<double> z(target_dim_, 0.0);
  for (std::size_t r = 0; r < target_dim_; ++r) {
    const double* row = components_.data() + r * source_dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < source_dim_; ++j) acc += row[j] * (x[j] - mean_[j]);
    z[r] = acc;
  }
  return z;
}

std::vector<double> LinearCodec::reconstruct(std::span<const double> z) const {
  require(z.size() == target_dim_, ErrorCode::kInvalidInput, "latent dimension mismatch");
  std::vector<double> x(mean_);
  for (std::size_t r = 0; r < target_dim_; ++r) {
    const double* row = components_.data() + r * source_dim_;
    for (std::size_t j = 0; j < source_dim_; ++j) x[j] += row[j] * z[r];
  }
  return x;
}

VectorDataset LinearCodec::project(const VectorDataset& data) const {
  require(data.d == source_dim_, ErrorCode::kInvalidInput, "dataset dimension mismatch");
  std::vector<float> out;
  out.reserve(data.n * target_dim_);
  for (std::size_t i = 0; i < data.n; ++i) {
    for (double v : project(data.row(i))) out.push_back(static_cast<float>(v));
  }
  return VectorDataset(data.n, target_dim_, std::move(out));
}

VectorDataset LinearCodec::reconstruct(const VectorDataset& latents) const {
  require(latents.d == target_dim_, ErrorCode::kInvalidInput, "latent dimension mismatch");
  std::vector<float> out;
  out.reserve(latents.n * source_dim_);
  std::vector<double> z(target_dim_);
  for (std::size_t i = 0; i < latents.n; ++i) {
    const auto row = latents.row(i);
    std::copy(row.begin(), row.end(), z.begin());
    for (double v : reconstruct(z)) out.push_back(static_cast<float>(v));
  }
  return VectorDataset(latents.n, source_dim_, std::move(out));
}

LinearCodec fit_linear_encoder(const VectorDataset& data, std::size_t target_dim) {
  require(data.n > 0, ErrorCode::kInvalidInput, "dataset is empty");
  require(target_dim >= 1 && target_dim <= data.d, ErrorCode::kInvalidInput,
          "target dimension " + std::to_string(target_dim) + " must be in [1, " +
              std::to_string(data.d) + "]");
  require(all_finite(data.data), ErrorCode::kNonFinite, "dataset has non-finite values");
  const auto n = static_cast<Eigen::Index>(data.n);
  const auto dim = static_cast<Eigen::Index>(data.d);

  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = data.data[i * dim + j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.info() == Eigen::Success, ErrorCode::kNonFinite, "eigendecomposition failed");
  // Eigen returns ascending order.
  std::vector<double> values(data.d);
  for (Eigen::Index i = 0; i < dim; ++i) values[i] = std::max(0.0, eig.eigenvalues()(dim - 1 - i));

  const double cutoff = 1e-12 * std::max(values.front(), std::numeric_limits<double>::min());
  std::vector<double> components(target_dim * data.d, 0.0);
  std::size_t rank = 0;
  for (std::size_t r = 0; r < target_dim; ++r) {
    if (values[r] <= cutoff) break;
    Eigen::VectorXd axis = eig.eigenvectors().col(dim - 1 - static_cast<Eigen::Index>(r));
    // Sign convention: largest-magnitude coordinate positive.
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    for (Eigen::Index j = 0; j < dim; ++j) components[r * data.d + j] = axis(j);
    ++rank;
  }
  return LinearCodec(data.d, target_dim, {mean.begin(), mean.end()}, std::move(components),
                     std::move(values), rank);
}

}  // namespace pqcodec
