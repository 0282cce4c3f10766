#include "pqcodec/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "pqcodec/quantiser.hpp"
#include "scan.hpp"

namespace pqcodec {
namespace {

using detail::mix_seed;
using detail::scan_book;

// Stream ids keep init, training and revival draws independent per subspace.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kTrainStream = 0x2000;

std::vector<float> subspace_slice(const VectorDataset& data, std::size_t s, std::size_t sub) {
  std::vector<float> out(data.n * sub);
  for (std::size_t i = 0; i < data.n; ++i) {
    const float* src = data.data.data() + i * data.d + s * sub;
    std::copy(src, src + sub, out.data() + i * sub);
  }
  return out;
}

void check_dataset(const VectorDataset& data, std::size_t d) {
  require(data.n > 0, ErrorCode::kInvalidInput, "dataset is empty");
  require(data.d == d, ErrorCode::kInvalidInput,
          "dataset d=" + std::to_string(data.d) + " does not match config d=" + std::to_string(d));
  require(data.data.size() == data.n * data.d, ErrorCode::kInvalidInput,
          "dataset payload does not match n*d");
  require(all_finite(data.data), ErrorCode::kNonFinite, "dataset has non-finite values");
}

// Runs fn(s) for every subspace on up to `workers` threads. Each subspace is
// written by exactly one thread.
template <typename Fn>
void for_each_subspace(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t s = 0; s < count; ++s) fn(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < count; s = next++) {
          try {
            fn(s);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

struct BookInitResult {
  std::vector<float> entries;
  std::size_t padded = 0;
};

BookInitResult kmeanspp(const std::vector<float>& slice, std::size_t n, std::size_t sub,
                        std::size_t k, std::mt19937_64& rng) {
  BookInitResult out;
  out.entries.resize(k * sub);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto set_center = [&](std::size_t c, std::size_t row) {
    std::copy(slice.data() + row * sub, slice.data() + (row + 1) * sub,
              out.entries.data() + c * sub);
    const float* center = out.entries.data() + c * sub;
    for (std::size_t i = 0; i < n; ++i) {
      double dist = 0.0;
      for (std::size_t j = 0; j < sub; ++j) {
        const double diff =
            static_cast<double>(slice[i * sub + j]) - static_cast<double>(center[j]);
        dist += diff * diff;
      }
      d2[i] = std::min(d2[i], dist);
    }
  };

  set_center(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::size_t chosen = 1;
  for (; chosen < k; ++chosen) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) break;  // every remaining point duplicates a center
    const double target = unit(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    set_center(chosen, pick);
  }

  if (chosen < k) {
    // Fewer distinct subvectors than K: pad with jittered copies.
    double var = 0.0;
    std::vector<double> mean(sub, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < sub; ++j) mean[j] += slice[i * sub + j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < sub; ++j) {
        const double diff = slice[i * sub + j] - mean[j];
        var += diff * diff;
      }
    var /= static_cast<double>(n * sub);
    const double scale = 1e-3 * (var > 0.0 ? std::sqrt(var) : 1.0);
    std::normal_distribution<double> jitter(0.0, scale);
    const std::size_t distinct = chosen;
    for (std::size_t c = distinct; c < k; ++c) {
      const float* src = out.entries.data() + (c % distinct) * sub;
      float* dst = out.entries.data() + c * sub;
      for (std::size_t j = 0; j < sub; ++j) {
        dst[j] = static_cast<float>(static_cast<double>(src[j]) + jitter(rng));
      }
    }
    out.padded = k - distinct;
  }
  return out;
}

struct SubspaceTrace {
  std::vector<double> sse;
  std::size_t revived = 0;
};

void revive(SubCodebook& book, const std::vector<float>& slice, std::size_t n,
            const std::vector<std::uint64_t>& counts, std::size_t threshold,
            std::mt19937_64& rng, std::size_t& revived) {
  if (threshold == 0) return;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t sub = book.dim();
  for (std::size_t k = 0; k < book.size(); ++k) {
    if (counts[k] >= threshold) continue;
    const std::size_t row = pick(rng);
    auto cw = book.codeword(k);
    std::copy(slice.data() + row * sub, slice.data() + (row + 1) * sub, cw.begin());
    ++revived;
  }
}

SubspaceTrace lloyd(SubCodebook& book, const std::vector<float>& slice, std::size_t n,
                    const TrainConfig& tc, std::mt19937_64& rng) {
  const std::size_t k = book.size();
  const std::size_t sub = book.dim();
  SubspaceTrace trace;
  trace.sse.reserve(tc.iterations);
  std::vector<double> sums(k * sub);
  std::vector<std::uint64_t> counts(k);
  for (std::size_t it = 0; it < tc.iterations; ++it) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = slice.data() + i * sub;
      double dist = 0.0;
      const std::uint32_t best = scan_book(x, book.entries().data(), k, sub, &dist);
      sse += dist;
      ++counts[best];
      double* acc = sums.data() + best * sub;
      for (std::size_t j = 0; j < sub; ++j) acc[j] += x[j];
    }
    trace.sse.push_back(sse);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto cw = book.codeword(c);
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < sub; ++j) {
        cw[j] = static_cast<float>(sums[c * sub + j] * inv);
      }
    }
    revive(book, slice, n, counts, tc.revival_threshold, rng, trace.revived);
  }
  return trace;
}

SubspaceTrace sgd_commitment(SubCodebook& book, const std::vector<float>& slice, std::size_t n,
                             std::size_t total_dim, double beta, const TrainConfig& tc,
                             std::mt19937_64& rng) {
  const std::size_t k = book.size();
  const std::size_t sub = book.dim();
  const std::size_t batch = tc.batch_size;
  const std::size_t epoch = std::max<std::size_t>(1, (n + batch - 1) / batch);
  // Matches loss_grad_codewords: the commitment term is mean-reduced over the
  // batch's B*d scalars.
  const double scale = tc.learning_rate * beta * 2.0 / static_cast<double>(batch * total_dim);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  SubspaceTrace trace;
  trace.sse.reserve(tc.iterations);
  std::vector<double> grad(k * sub);
  std::vector<std::uint64_t> epoch_counts(k, 0);
  std::vector<std::size_t> rows(batch);
  for (std::size_t it = 0; it < tc.iterations; ++it) {
    for (auto& r : rows) r = pick(rng);
    std::fill(grad.begin(), grad.end(), 0.0);
    double sse = 0.0;
    for (std::size_t r : rows) {
      const float* x = slice.data() + r * sub;
      double dist = 0.0;
      const std::uint32_t best = scan_book(x, book.entries().data(), k, sub, &dist);
      sse += dist;
      ++epoch_counts[best];
      const auto cw = book.codeword(best);
      for (std::size_t j = 0; j < sub; ++j) {
        grad[best * sub + j] += static_cast<double>(cw[j]) - static_cast<double>(x[j]);
      }
    }
    trace.sse.push_back(sse);
    for (std::size_t c = 0; c < k; ++c) {
      auto cw = book.codeword(c);
      for (std::size_t j = 0; j < sub; ++j) {
        cw[j] = static_cast<float>(static_cast<double>(cw[j]) - scale * grad[c * sub + j]);
      }
    }
    if ((it + 1) % epoch == 0) {
      revive(book, slice, n, epoch_counts, tc.revival_threshold, rng, trace.revived);
      std::fill(epoch_counts.begin(), epoch_counts.end(), 0);
    }
  }
  return trace;
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  return mode == TrainMode::kBatchKMeans ? "batch-kmeans" : "sgd-commitment";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "batch-kmeans") return TrainMode::kBatchKMeans;
  if (name == "sgd-commitment") return TrainMode::kSgdCommitment;
  fail(ErrorCode::kInvalidInput, "unknown training mode '" + std::string(name) +
                                     "' (expected batch-kmeans or sgd-commitment)");
}

void TrainConfig::validate() const {
  require(iterations >= 1, ErrorCode::kInvalidInput, "iterations must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidInput, "batch size must be >= 1");
  if (mode == TrainMode::kSgdCommitment) {
    require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::kInvalidInput,
            "learning rate must be > 0 in sgd-commitment mode");
  }
}

bool InitReport::any_padded() const {
  return std::any_of(padded.begin(), padded.end(), [](std::size_t p) { return p > 0; });
}

ProductCodebook init_codebooks(const VectorDataset& data, const PQConfig& config,
                               std::uint64_t seed, InitReport* report) {
  check_dataset(data, config.d());
  const std::size_t sub = config.sub_dim();
  std::vector<SubCodebook> books(config.subspaces());
  std::vector<std::size_t> padded(config.subspaces(), 0);
  for (std::size_t s = 0; s < config.subspaces(); ++s) {
    std::mt19937_64 rng(mix_seed(seed, kInitStream + s));
    const auto slice = subspace_slice(data, s, sub);
    auto init = kmeanspp(slice, data.n, sub, config.codebook_size(), rng);
    books[s] = SubCodebook(config.codebook_size(), sub, std::move(init.entries));
    padded[s] = init.padded;
  }
  if (report != nullptr) report->padded = std::move(padded);
  return ProductCodebook(config, std::move(books));
}

TrainResult train_codebooks(const VectorDataset& data, ProductCodebook pc, const TrainConfig& tc) {
  tc.validate();
  const PQConfig cfg = pc.config();
  check_dataset(data, cfg.d());
  const std::size_t sub = cfg.sub_dim();

  std::vector<SubspaceTrace> traces(cfg.subspaces());
  for_each_subspace(cfg.subspaces(), tc.workers, [&](std::size_t s) {
    std::mt19937_64 rng(mix_seed(tc.seed, kTrainStream + s));
    const auto slice = subspace_slice(data, s, sub);
    if (tc.mode == TrainMode::kBatchKMeans) {
      traces[s] = lloyd(pc.book(s), slice, data.n, tc, rng);
    } else {
      traces[s] = sgd_commitment(pc.book(s), slice, data.n, cfg.d(), cfg.beta(), tc, rng);
    }
  });

  TrainReport report;
  const double scalars = static_cast<double>(
      (tc.mode == TrainMode::kBatchKMeans ? data.n : tc.batch_size) * cfg.d());
  report.distortion_trace.assign(tc.iterations, 0.0);
  for (std::size_t it = 0; it < tc.iterations; ++it) {
    double sse = 0.0;
    for (const auto& t : traces) sse += t.sse[it];
    report.distortion_trace[it] = sse / scalars;
  }
  for (const auto& t : traces) report.revived.push_back(t.revived);
  for (const auto& b : pc.books()) {
    require(all_finite(b.entries()), ErrorCode::kNonFinite, "training diverged");
  }

  const auto grid = as_grid(data, data.n, 1);
  const auto encoded = pq_encode(grid, pc, tc.workers);
  report.final_distortion = encoded.distortion;
  report.usage = usage_stats(encoded.indices, cfg.codebook_size());
  return {std::move(pc), std::move(report)};
}

}  // namespace pqcodec
