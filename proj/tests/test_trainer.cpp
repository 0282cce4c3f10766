#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "pqcodec/quantiser.hpp"
#include "pqcodec/trainer.hpp"

using namespace pqcodec;

namespace {

VectorDataset gaussian_blobs(std::size_t n, const std::vector<std::vector<double>>& centres,
                             double sigma, std::mt19937_64& rng) {
  const std::size_t d = centres[0].size();
  std::normal_distribution<double> noise(0.0, sigma);
  std::uniform_int_distribution<std::size_t> pick(0, centres.size() - 1);
  VectorDataset ds(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centres[pick(rng)];
    for (std::size_t j = 0; j < d; ++j) ds.data[i * d + j] = static_cast<float>(c[j] + noise(rng));
  }
  return ds;
}

// Plain Lloyd with random restarts, no library code involved.
double restart_kmeans_sse(const VectorDataset& ds, std::size_t k, int restarts, std::mt19937_64& rng) {
  double best = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<std::size_t> pick(0, ds.n - 1);
  for (int r = 0; r < restarts; ++r) {
    std::vector<float> cw;
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = ds.row(pick(rng));
      cw.insert(cw.end(), row.begin(), row.end());
    }
    double sse = 0.0;
    for (int it = 0; it < 50; ++it) {
      std::vector<double> sum(k * ds.d, 0.0);
      std::vector<std::size_t> cnt(k, 0);
      sse = 0.0;
      for (std::size_t i = 0; i < ds.n; ++i) {
        const auto a = oracle::linear_scan(ds.row(i), cw, ds.d);
        ++cnt[a];
        for (std::size_t j = 0; j < ds.d; ++j) {
          const double diff = ds.row(i)[j] - cw[a * ds.d + j];
          sse += diff * diff;
          sum[a * ds.d + j] += ds.row(i)[j];
        }
      }
      for (std::size_t c = 0; c < k; ++c)
        if (cnt[c] > 0)
          for (std::size_t j = 0; j < ds.d; ++j)
            cw[c * ds.d + j] = static_cast<float>(sum[c * ds.d + j] / static_cast<double>(cnt[c]));
    }
    best = std::min(best, sse);
  }
  return best;
}

}  // namespace

TEST_CASE("init covers a dataset of exactly K distinct subvectors") {
  const PQConfig cfg(2, 2, 4);
  VectorDataset ds(4, 2, {0, 10, 1, 11, 2, 12, 3, 13});
  InitReport report;
  const auto pc = init_codebooks(ds, cfg, 5, &report);
  CHECK_FALSE(report.any_padded());
  for (std::size_t s = 0; s < 2; ++s) {
    const auto e = pc.book(s).entries();
    std::set<float> got(e.begin(), e.end());
    std::set<float> want;
    for (std::size_t i = 0; i < 4; ++i) want.insert(ds.row(i)[s]);
    CHECK(got == want);
  }
}

TEST_CASE("init pads with jitter when distinct subvectors run short") {
  const PQConfig cfg(1, 1, 4);
  VectorDataset ds(6, 1, {0, 0, 0, 10, 10, 10});
  InitReport report;
  const auto pc = init_codebooks(ds, cfg, 1, &report);
  CHECK(report.any_padded());
  CHECK(report.padded[0] == 2);
  const auto e = pc.book(0).entries();
  CHECK(std::set<float>(e.begin(), e.end()).size() == 4);
  CHECK(std::count(e.begin(), e.end(), 0.0f) == 1);
  CHECK(std::count(e.begin(), e.end(), 10.0f) == 1);
}

TEST_CASE("same seed gives bit-identical codebooks, different seeds differ") {
  std::mt19937_64 rng(3);
  VectorDataset ds(500, 8, oracle::random_floats(4000, rng));
  const PQConfig cfg(8, 4, 16);
  TrainConfig tc;
  tc.iterations = 5;
  tc.seed = 42;
  const auto a = train_codebooks(ds, init_codebooks(ds, cfg, tc.seed), tc);
  tc.workers = 3;
  const auto b = train_codebooks(ds, init_codebooks(ds, cfg, tc.seed), tc);
  CHECK(a.codebook == b.codebook);
  CHECK(a.report.distortion_trace == b.report.distortion_trace);
  CHECK_FALSE(init_codebooks(ds, cfg, 43) == init_codebooks(ds, cfg, 42));

  tc.mode = TrainMode::kSgdCommitment;
  tc.batch_size = 64;
  const auto c = train_codebooks(ds, init_codebooks(ds, cfg, 1), tc);
  const auto d = train_codebooks(ds, init_codebooks(ds, cfg, 1), tc);
  CHECK(c.codebook == d.codebook);
}

TEST_CASE("codewords already at the data are a fixed point") {
  std::mt19937_64 rng(4);
  const PQConfig cfg(4, 2, 3);
  const auto pc = oracle::random_codebook(cfg, rng);
  IndexGrid idx(1, 30, 2);
  for (std::size_t i = 0; i < idx.indices.size(); ++i) idx.indices[i] = static_cast<std::uint32_t>(i % 3);
  const auto ds = as_dataset(pq_decode(idx, pc));
  TrainConfig tc;
  tc.iterations = 4;
  const auto r = train_codebooks(ds, pc, tc);
  CHECK(r.codebook == pc);
  CHECK(r.report.final_distortion == 0.0);
  for (double v : r.report.distortion_trace) CHECK(v == 0.0);
}

TEST_CASE("batch mode with K=1 lands on the mean in one step") {
  VectorDataset ds(4, 1, {1, 2, 3, 10});
  std::vector<SubCodebook> books;
  books.emplace_back(1, 1, std::vector<float>{-50.0f});
  TrainConfig tc;
  tc.iterations = 1;
  const auto r = train_codebooks(ds, ProductCodebook(PQConfig(1, 1, 1), std::move(books)), tc);
  CHECK(r.codebook.book(0).codeword(0)[0] == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("well-separated blobs: trained distortion is close to the restart oracle") {
  std::mt19937_64 rng(5);
  const auto ds = gaussian_blobs(800, {{0, 0}, {6, 0}, {0, 6}, {6, 6}}, 0.5, rng);
  TrainConfig tc;
  tc.iterations = 30;
  tc.seed = 9;
  const PQConfig cfg(2, 1, 4);
  const auto r = train_codebooks(ds, init_codebooks(ds, cfg, tc.seed), tc);
  std::mt19937_64 orng(99);
  const double oracle_mse = restart_kmeans_sse(ds, 4, 10, orng) / (800.0 * 2.0);
  CHECK(r.report.final_distortion <= oracle_mse * 1.01);
}

TEST_CASE("subspaces train independently") {
  std::mt19937_64 rng(6);
  VectorDataset ds(300, 4, oracle::random_floats(1200, rng));
  const PQConfig cfg(4, 2, 8);
  TrainConfig tc;
  tc.iterations = 6;
  const auto init = init_codebooks(ds, cfg, 3);
  const auto base = train_codebooks(ds, init, tc);

  // scrambling subspace 1's data leaves subspace 0's trained codebook untouched
  auto scrambled = ds;
  for (std::size_t i = 0; i < ds.n; ++i) {
    scrambled.data[i * 4 + 2] = -ds.data[i * 4 + 3] * 3.0f;
    scrambled.data[i * 4 + 3] = ds.data[i * 4 + 2] + 1.0f;
  }
  const auto other = train_codebooks(scrambled, init, tc);
  CHECK(other.codebook.book(0) == base.codebook.book(0));
  CHECK_FALSE(other.codebook.book(1) == base.codebook.book(1));
}

TEST_CASE("one SGD step equals lr times the analytic commitment gradient") {
  // Minibatches are drawn with replacement; identical rows make every draw the
  // same batch, so the step has a closed form.
  std::mt19937_64 rng(7);
  const PQConfig cfg(4, 2, 4, 0.5);
  const auto row = oracle::dyadic_floats(4, rng);
  VectorDataset ds(16, 4);
  for (std::size_t i = 0; i < 16; ++i) std::copy(row.begin(), row.end(), ds.row(i).begin());
  const auto init = oracle::random_codebook(cfg, rng);
  TrainConfig tc;
  tc.mode = TrainMode::kSgdCommitment;
  tc.iterations = 1;
  tc.batch_size = 16;
  tc.learning_rate = 0.5;
  tc.revival_threshold = 0;
  const auto r = train_codebooks(ds, init, tc);

  const auto grid = as_grid(ds, 1, 16);
  const auto idx = pq_encode(grid, init).indices;
  const auto grad = loss_grad_codewords(grid, idx, init);
  std::size_t i = 0;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto before = init.book(s).entries();
    const auto after = r.codebook.book(s).entries();
    for (std::size_t j = 0; j < before.size(); ++j, ++i) {
      CHECK(after[j] == doctest::Approx(before[j] - tc.learning_rate * grad[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("Lloyd trace never increases") {
  std::mt19937_64 rng(8);
  const auto ds = gaussian_blobs(2000, {{0, 0, 0, 0}, {3, 1, 0, 2}, {-2, 2, 1, 0}}, 1.0, rng);
  for (std::size_t s : {1, 2, 4}) {
    TrainConfig tc;
    tc.iterations = 15;
    const auto r = train_codebooks(ds, init_codebooks(ds, PQConfig(4, s, 16), 1), tc);
    for (std::size_t i = 1; i < r.report.distortion_trace.size(); ++i)
      CHECK(r.report.distortion_trace[i] <= r.report.distortion_trace[i - 1] + 1e-10);
    CHECK(r.report.final_distortion <= r.report.distortion_trace.back() + 1e-10);
  }
}

TEST_CASE("trainer rejects bad input") {
  VectorDataset ds(3, 2, {0, 1, 2, 3, 4, std::numeric_limits<float>::infinity()});
  CHECK_THROWS_AS(init_codebooks(ds, PQConfig(2, 1, 2), 0), Error);
  VectorDataset ok(3, 2, {0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(init_codebooks(ok, PQConfig(4, 1, 2), 0), Error);
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), Error);
  CHECK(parse_train_mode("sgd-commitment") == TrainMode::kSgdCommitment);
  CHECK_THROWS_AS(parse_train_mode("adam"), Error);
}
