#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "pqcodec/diagnostics.hpp"
#include "pqcodec/io.hpp"
#include "pqcodec/quantiser.hpp"
#include "pqcodec/sweep.hpp"

using namespace pqcodec;
using namespace pqcodec::sweep;

namespace {

SweepSpec tiny_spec() {
  SweepSpec spec;
  spec.d_values = {4};
  spec.subspaces = {SubspaceRule::parse("2")};
  spec.k_values = {8};
  spec.seeds = {1};
  spec.dataset.mixture.n = 400;
  spec.dataset.mixture.components = 6;
  spec.train.iterations = 5;
  spec.record_timings = false;
  return spec;
}

SweepRecord fixture(std::size_t d, std::size_t s, std::size_t k, double mse, double h, double p) {
  SweepRecord r;
  r.d = d;
  r.subspaces = s;
  r.codebook_size = k;
  r.seed = 1;
  r.mse = mse;
  r.h_n_mean = h;
  r.p_n_mean = p;
  return r;
}

// Records that move in every claimed direction.
std::vector<SweepRecord> trend_fixture() {
  std::vector<SweepRecord> out;
  for (std::size_t d : {8u, 16u, 32u})
    for (std::size_t s : {std::size_t{1}, d / 4, d / 2, d})
      for (std::size_t k : {32u, 128u}) {
        const double mse = (s == 1 ? 0.1 * static_cast<double>(d) : 1.0 / static_cast<double>(s)) /
                           (k == 32 ? 1.0 : 2.0);
        out.push_back(fixture(d, s, k, mse, s == 1 ? 0.5 : 0.9, k == 32 ? 0.8 : 0.6));
      }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("subspace rules") {
  CHECK(SubspaceRule::parse("d").resolve(16) == 16u);
  CHECK(SubspaceRule::parse("d/4").resolve(16) == 4u);
  CHECK(SubspaceRule::parse("d/4").resolve(6) == std::nullopt);
  CHECK(SubspaceRule::parse("3").resolve(12) == 3u);
  CHECK(SubspaceRule::parse("3").resolve(8) == std::nullopt);
  CHECK(SubspaceRule::parse("d/2").to_string() == "d/2");
  CHECK_THROWS_AS(SubspaceRule::parse("x/2"), Error);
  CHECK_THROWS_AS(SubspaceRule::parse("d/0"), Error);
}

TEST_CASE("trend dataset is standardised and nested in d") {
  MixtureSpec m;
  m.n = 2000;
  const auto wide = make_trend_dataset(8, m);
  const auto narrow = make_trend_dataset(4, m);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(narrow.row(i)[j] == wide.row(i)[j]);
  for (std::size_t j = 0; j < 8; ++j) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
      s += wide.row(i)[j];
      s2 += static_cast<double>(wide.row(i)[j]) * wide.row(i)[j];
    }
    CHECK(s / m.n == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
    CHECK(s2 / m.n == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK(make_trend_dataset(8, m) == wide);
}

TEST_CASE("a single-cell sweep equals a direct trainer and diagnostics run") {
  const auto spec = tiny_spec();
  const auto result = run_sweep(spec);
  REQUIRE(result.records.size() == 1);
  const auto& rec = result.records[0];

  const auto data = make_trend_dataset(4, spec.dataset.mixture);
  TrainConfig tc = spec.train;
  tc.seed = 1;
  const PQConfig cfg(4, 2, 8, spec.beta);
  const auto trained = train_codebooks(data, init_codebooks(data, cfg, 1), tc);
  const auto enc = pq_encode(as_grid(data, data.n, 1), trained.codebook);
  const auto usage = usage_stats(enc.indices, 8);

  CHECK(rec.codebook == trained.codebook);
  CHECK(rec.mse == enc.distortion);
  CHECK(rec.h_n_mean == mean_normalised_entropy(usage));
  CHECK(rec.p_n_mean == mean_normalised_perplexity(usage));
  CHECK(rec.trace == trained.report.distortion_trace);
  CHECK(rec.train_ms == 0.0);
}

TEST_CASE("saved codebook reproduces the recorded MSE") {
  const auto spec = tiny_spec();
  const auto rec = run_sweep(spec).records.at(0);
  const auto dir = oracle::scratch_dir("sweep_cb");
  io::write_codebook(*rec.codebook, dir / "cb.pqcb");
  const auto pc = io::read_codebook(dir / "cb.pqcb");
  const auto data = load_sweep_dataset(spec.dataset, 4);
  const auto z_q = pq_decode(pq_assign(as_grid(data, data.n, 1), pc), pc);
  CHECK(mse(data.data, z_q.data) == doctest::Approx(rec.mse).epsilon(1e-12));
}

TEST_CASE("two seeds give two records with the same config echo") {
  auto spec = tiny_spec();
  spec.seeds = {1, 2};
  spec.workers = 2;
  const auto result = run_sweep(spec);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].seed == 1);
  CHECK(result.records[1].seed == 2);
  CHECK(result.records[0].d == result.records[1].d);
  CHECK(result.records[0].subspaces == result.records[1].subspaces);
  CHECK(result.records[0].codebook_size == result.records[1].codebook_size);
}

TEST_CASE("infeasible S rules are skipped, not fatal") {
  auto spec = tiny_spec();
  spec.d_values = {4, 6};
  spec.subspaces = {SubspaceRule::parse("d/4"), SubspaceRule::parse("2")};
  const auto result = run_sweep(spec);
  CHECK(result.records.size() == 3);
  REQUIRE(result.skipped.size() == 1);
  CHECK(result.skipped[0].d == 6);
  CHECK(result.skipped[0].rule == "d/4");
}

TEST_CASE("trend claims on hand-made records") {
  const auto good = trend_fixture();
  const auto v = trend_checks(good);
  for (const auto& c : v.claims) {
    INFO(c.id);
    CHECK(c.status == ClaimStatus::kPass);
    CHECK(c.comparisons > 0);
  }
  CHECK(v.all_pass());

  auto flat = good;
  for (auto& r : flat) r.mse = 1.0;
  CHECK(trend_checks(flat).claim("c").status == ClaimStatus::kPass);

  auto bad = good;
  for (auto& r : bad)
    if (r.subspaces == 1) r.h_n_mean = 0.99;
  CHECK(trend_checks(bad).claim("d").status == ClaimStatus::kFail);
  CHECK_FALSE(trend_checks(bad).claim("d").violations.empty());

  auto slight = good;
  for (auto& r : slight)
    if (r.codebook_size == 128) r.p_n_mean = 0.8 * 1.01;  // within 2% slack
  CHECK(trend_checks(slight).claim("e").status == ClaimStatus::kPass);
  CHECK(trend_checks(slight, 0.0).claim("e").status == ClaimStatus::kFail);
}

TEST_CASE("one cell leaves cross-cell claims without data") {
  const auto v = trend_checks({fixture(8, 2, 32, 0.1, 0.9, 0.8)});
  for (const auto& c : v.claims) CHECK(c.status == ClaimStatus::kInsufficientData);
  CHECK_FALSE(v.all_pass());
}

TEST_CASE("CSV round-trips every double and re-emits byte-identically") {
  auto recs = trend_fixture();
  recs[0].mse = 0.1 + 0.2;
  recs[1].psnr_db = kInfinitePsnr;
  recs[2].mse = 1e-300;
  const auto csv = records_to_csv(recs);
  const auto rows = parse_csv(csv);
  REQUIRE(rows.size() == recs.size() + 1);
  CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& row = rows[i + 1];
    REQUIRE(row.size() == 10);
    CHECK(std::stoul(row[0]) == recs[i].d);
    CHECK(std::strtod(row[4].c_str(), nullptr) == recs[i].mse);
    CHECK(std::strtod(row[5].c_str(), nullptr) == recs[i].psnr_db);
    CHECK(std::strtod(row[6].c_str(), nullptr) == recs[i].h_n_mean);
  }

  const auto dir = oracle::scratch_dir("sweep_report");
  const auto files = emit_report(recs, dir);
  const auto first = io::read_file(files.csv);
  const auto first_summary = io::read_file(files.summary);
  emit_report(recs, dir);
  CHECK(io::read_file(files.csv) == first);
  CHECK(io::read_file(files.summary) == first_summary);

  CHECK(parse_csv(records_to_csv({recs[0]})).size() == 2);
}

TEST_CASE("sweep CSV is byte-identical across runs") {
  auto spec = tiny_spec();
  spec.seeds = {1, 2};
  spec.workers = 2;
  CHECK(records_to_csv(run_sweep(spec).records) == records_to_csv(run_sweep(spec).records));
}

TEST_CASE("spec parsing") {
  const auto spec = parse_sweep_spec(R"({
    "d": [8, 16], "S": [1, "d/2", "d"], "K": [32], "seeds": [1, 2],
    "dataset": {"type": "gaussian_mixture", "n": 1000, "components": 8},
    "train": {"mode": "sgd-commitment", "iterations": 3, "batch_size": 64},
    "record_timings": false
  })");
  CHECK(spec.d_values == std::vector<std::size_t>{8, 16});
  CHECK(spec.subspaces.size() == 3);
  CHECK(spec.dataset.mixture.n == 1000);
  CHECK(spec.train.mode == TrainMode::kSgdCommitment);
  CHECK_FALSE(spec.record_timings);

  CHECK_THROWS_AS(parse_sweep_spec("{\"d\": [8,"), Error);
  try {
    parse_sweep_spec("{\"d\": [8,");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_sweep_spec(R"({"d":[8],"S":[1],"K":[8],"seeds":[1],"colour":1})"), Error);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"d":[],"S":[1],"K":[8],"seeds":[1]})"), Error);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"d":[8],"S":[1],"K":[8],"seeds":[1],"dataset":{"type":"csv"}})"), Error);
}

TEST_CASE("vector-file datasets are projected down to each d") {
  const auto dir = oracle::scratch_dir("sweep_vec");
  MixtureSpec m;
  m.n = 300;
  io::write_dataset(make_trend_dataset(12, m), dir / "v.pqvd");
  DatasetSpec ds;
  ds.kind = DatasetSpec::Kind::kVectorFile;
  ds.path = dir / "v.pqvd";
  CHECK(load_sweep_dataset(ds, 4).d == 4);
  CHECK(load_sweep_dataset(ds, 12).d == 12);
  CHECK_THROWS_AS(load_sweep_dataset(ds, 16), Error);
}
