#include <doctest.h>

#include <json.hpp>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pqcodec/cli.hpp"
#include "pqcodec/diagnostics.hpp"
#include "pqcodec/io.hpp"
#include "pqcodec/quantiser.hpp"

using namespace pqcodec;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Exit status of the real binary, to cover main() and process-level behaviour.
int run_binary(const std::string& args) {
  const std::string cmd = std::string(PQCODEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string str(const fs::path& p) { return p.string(); }

void write_text(const fs::path& p, const std::string& text) {
  io::write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

VectorDataset noisy_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return VectorDataset(n, d, oracle::random_floats(n * d, rng));
}

}  // namespace

TEST_CASE("train rejects S that does not divide d") {
  const auto dir = oracle::scratch_dir("cli_train_bad");
  io::write_dataset(noisy_data(50, 6, 1), dir / "x.pqvd");
  const auto r = run({"train", "--data", str(dir / "x.pqvd"), "--subspaces", "4", "--codebook-size", "4",
                      "--out", str(dir / "cb.pqcb")});
  CHECK(r.code == 2);
  CHECK(r.err.find("--subspaces") != std::string::npos);
  CHECK(r.err.find("divide") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "cb.pqcb"));
  CHECK(run_binary("train --data " + str(dir / "x.pqvd") + " --subspaces 4 --codebook-size 4 --out " +
                   str(dir / "cb.pqcb")) == 2);
}

TEST_CASE("argument and file errors map to exit codes") {
  const auto dir = oracle::scratch_dir("cli_errors");
  CHECK(run({}).code == 2);
  CHECK(run({"train"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--data", str(dir / "missing.pqvd"), "--subspaces", "1", "--codebook-size", "2",
             "--out", str(dir / "cb")}).code == 3);
  write_text(dir / "junk.pqvd", "JUNKJUNKJUNKJUNK");
  CHECK(run({"train", "--data", str(dir / "junk.pqvd"), "--subspaces", "1", "--codebook-size", "2",
             "--out", str(dir / "cb")}).code == 3);
  CHECK(run({"train", "--help"}).code == 0);
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("nope") == 2);
}

TEST_CASE("training on codeword-exact data reports zero MSE") {
  const auto dir = oracle::scratch_dir("cli_exact");
  std::mt19937_64 rng(2);
  const PQConfig cfg(4, 2, 3);
  const auto pc = oracle::random_codebook(cfg, rng);
  IndexGrid idx(1, 9, 2);
  for (std::uint32_t i = 0; i < 9; ++i) {
    idx.indices[2 * i] = i / 3;
    idx.indices[2 * i + 1] = i % 3;
  }
  io::write_dataset(as_dataset(pq_decode(idx, pc)), dir / "x.pqvd");
  const auto r = run({"--json", "train", "--data", str(dir / "x.pqvd"), "--subspaces", "2",
                      "--codebook-size", "3", "--out", str(dir / "cb.pqcb")});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["final_mse"].get<double>() <= 1e-12);
  CHECK(doc["command"] == "train");
}

TEST_CASE("same seed gives identical codebook and bitstream files") {
  const auto dir = oracle::scratch_dir("cli_determinism");
  io::write_dataset(noisy_data(400, 8, 3), dir / "x.pqvd");
  for (const char* tag : {"a", "b"}) {
    REQUIRE(run({"--seed", "11", "--quiet", "train", "--data", str(dir / "x.pqvd"), "--subspaces", "4",
                 "--codebook-size", "16", "--iterations", "5", "--out", str(dir / (std::string(tag) + ".pqcb"))})
                .code == 0);
    REQUIRE(run({"--quiet", "encode", "--input", str(dir / "x.pqvd"), "--codebook",
                 str(dir / (std::string(tag) + ".pqcb")), "--out", str(dir / (std::string(tag) + ".pqix"))})
                .code == 0);
  }
  CHECK(io::read_file(dir / "a.pqcb") == io::read_file(dir / "b.pqcb"));
  CHECK(io::read_file(dir / "a.pqix") == io::read_file(dir / "b.pqix"));

  REQUIRE(run({"--seed", "12", "--quiet", "train", "--data", str(dir / "x.pqvd"), "--subspaces", "4",
               "--codebook-size", "16", "--iterations", "5", "--out", str(dir / "c.pqcb")})
              .code == 0);
  CHECK(io::read_file(dir / "a.pqcb") != io::read_file(dir / "c.pqcb"));
}

TEST_CASE("encode, decode, encode is byte-identical and sized by the formula") {
  const auto dir = oracle::scratch_dir("cli_roundtrip");
  io::write_dataset(noisy_data(60, 6, 4), dir / "x.pqvd");
  REQUIRE(run({"--quiet", "train", "--data", str(dir / "x.pqvd"), "--subspaces", "3", "--codebook-size",
               "5", "--out", str(dir / "cb.pqcb")})
              .code == 0);
  const auto enc = run({"--json", "encode", "--input", str(dir / "x.pqvd"), "--codebook", str(dir / "cb.pqcb"),
                        "--grid-width", "10", "--out", str(dir / "a.pqix")});
  REQUIRE(enc.code == 0);
  const auto doc = json::parse(enc.out);
  CHECK(doc["h"] == 6);
  CHECK(doc["w"] == 10);
  const std::size_t expected = 28 + (6 * 10 * 3 * 3 + 7) / 8;
  CHECK(doc["bytes"] == expected);
  CHECK(fs::file_size(dir / "a.pqix") == expected);

  REQUIRE(run({"decode", "--input", str(dir / "a.pqix"), "--codebook", str(dir / "cb.pqcb"), "--out",
               str(dir / "y.pqvd")})
              .code == 0);
  REQUIRE(run({"encode", "--input", str(dir / "y.pqvd"), "--codebook", str(dir / "cb.pqcb"), "--grid-width",
               "10", "--out", str(dir / "b.pqix")})
              .code == 0);
  CHECK(io::read_file(dir / "a.pqix") == io::read_file(dir / "b.pqix"));

  const auto human = run({"encode", "--input", str(dir / "x.pqvd"), "--codebook", str(dir / "cb.pqcb"),
                          "--out", str(dir / "c.pqix")});
  CHECK(human.out.find("distortion") != std::string::npos);
  CHECK(human.out.find("compressed size") != std::string::npos);

  CHECK(run({"encode", "--input", str(dir / "x.pqvd"), "--codebook", str(dir / "cb.pqcb"), "--grid-width",
             "7", "--out", str(dir / "d.pqix")})
            .code == 2);
}

TEST_CASE("encode rejects latents of the wrong dimension") {
  const auto dir = oracle::scratch_dir("cli_dmismatch");
  io::write_dataset(noisy_data(40, 6, 5), dir / "x.pqvd");
  io::write_dataset(noisy_data(40, 8, 5), dir / "w.pqvd");
  REQUIRE(run({"--quiet", "train", "--data", str(dir / "x.pqvd"), "--subspaces", "2", "--codebook-size", "4",
               "--out", str(dir / "cb.pqcb")})
              .code == 0);
  const auto r = run({"encode", "--input", str(dir / "w.pqvd"), "--codebook", str(dir / "cb.pqcb"), "--out",
                      str(dir / "a.pqix")});
  CHECK(r.code == 2);
  CHECK(run({"train", "--data", str(dir / "x.pqvd"), "--d", "8", "--subspaces", "2", "--codebook-size", "4",
             "--out", str(dir / "cb2.pqcb")})
            .code == 2);
}

TEST_CASE("stats agrees with the diagnostics library") {
  const auto dir = oracle::scratch_dir("cli_stats");
  std::mt19937_64 rng(6);
  const PQConfig cfg(4, 2, 4);
  io::write_codebook(oracle::random_codebook(cfg, rng), dir / "cb.pqcb");

  IndexGrid uniform(2, 4, 2);
  for (std::size_t i = 0; i < 16; ++i) uniform.indices[i] = static_cast<std::uint32_t>((i / 2) % 4);
  io::pack_indices(uniform, 4, dir / "u.pqix");
  const auto u = run({"--json", "stats", "--indices", str(dir / "u.pqix"), "--codebook", str(dir / "cb.pqcb")});
  REQUIRE(u.code == 0);
  auto doc = json::parse(u.out);
  CHECK(doc["h_n_mean"].get<double>() == doctest::Approx(1.0));
  CHECK(doc["p_n_mean"].get<double>() == doctest::Approx(1.0));

  io::pack_indices(IndexGrid(2, 4, 2), 4, dir / "c.pqix");
  const auto c = run({"--json", "stats", "--indices", str(dir / "c.pqix"), "--codebook", str(dir / "cb.pqcb")});
  doc = json::parse(c.out);
  CHECK(doc["h_n_mean"].get<double>() == 0.0);
  CHECK(doc["p_n_mean"].get<double>() == doctest::Approx(0.25));

  IndexGrid mixed(3, 3, 2);
  std::uniform_int_distribution<std::uint32_t> pick(0, 3);
  for (auto& i : mixed.indices) i = pick(rng);
  io::pack_indices(mixed, 4, dir / "m.pqix");
  doc = json::parse(run({"--json", "stats", "--indices", str(dir / "m.pqix"), "--codebook", str(dir / "cb.pqcb")}).out);
  const auto lib = usage_stats(mixed, 4);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(doc["subspaces"][s]["h_n"].get<double>() == lib[s].normalised_entropy);
    CHECK(doc["subspaces"][s]["p_n"].get<double>() == lib[s].normalised_perplexity);
  }

  const auto human = run({"stats", "--indices", str(dir / "u.pqix"), "--codebook", str(dir / "cb.pqcb")});
  CHECK(human.out.find("H_n=1") != std::string::npos);

  io::pack_indices(IndexGrid(1, 1, 2), 8, dir / "k8.pqix");
  CHECK(run({"stats", "--indices", str(dir / "k8.pqix"), "--codebook", str(dir / "cb.pqcb")}).code == 2);
}

TEST_CASE("minimal sweep spec gives one row and insufficient data") {
  const auto dir = oracle::scratch_dir("cli_sweep");
  write_text(dir / "spec.json",
             R"({"d":[4],"S":[2],"K":[4],"seeds":[1],"dataset":{"n":200},"train":{"iterations":3},"record_timings":false})");
  const auto r = run({"--json", "sweep", "--spec", str(dir / "spec.json"), "--out-dir", str(dir / "out")});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  for (const auto& c : doc["claims"]) CHECK(c["status"] == "insufficient data");
  const auto csv = io::read_file(dir / "out" / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "sweep.partial.csv"));

  write_text(dir / "bad.json", R"({"d":[4],)");
  const auto bad = run({"sweep", "--spec", str(dir / "bad.json"), "--out-dir", str(dir / "out2")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("byte") != std::string::npos);
}

TEST_CASE("bench writes a per-config CSV") {
  const auto dir = oracle::scratch_dir("cli_bench");
  write_text(dir / "plan.json", R"({"configs":[{"d":8,"S":1,"K":16},{"d":8,"S":4,"K":16}],"h":4,"w":4,"reps":5,"warmup":0})");
  const auto r = run({"--json", "bench", "--configs", str(dir / "plan.json"), "--out", str(dir / "b.csv")});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).contains("subspace_overhead"));
  const auto csv = io::read_file(dir / "b.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("extract cuts patches and optionally projects them") {
  const auto dir = oracle::scratch_dir("cli_extract");
  io::Image img{8, 8, 3, std::vector<float>(192)};
  std::mt19937_64 rng(7);
  for (auto& v : img.values) v = static_cast<float>(rng() % 256) / 255.0f;
  io::write_pnm(img, dir / "img.ppm");

  REQUIRE(run({"extract", "--image", str(dir / "img.ppm"), "--patch", "2", "--stride", "2", "--out",
               str(dir / "p.pqvd")})
              .code == 0);
  const auto ds = io::read_dataset(dir / "p.pqvd");
  CHECK(ds.n == 16);
  CHECK(ds.d == 12);

  REQUIRE(run({"extract", "--image", str(dir / "img.ppm"), "--patch", "2", "--stride", "2", "--pca-dim", "4",
               "--out", str(dir / "q.pqvd")})
              .code == 0);
  CHECK(io::read_dataset(dir / "q.pqvd").d == 4);
  CHECK(run({"extract", "--image", str(dir / "img.ppm"), "--patch", "9", "--out", str(dir / "r.pqvd")}).code == 2);

  // an image can be encoded directly as a patch grid
  REQUIRE(run({"--quiet", "train", "--data", str(dir / "p.pqvd"), "--subspaces", "3", "--codebook-size", "4",
               "--out", str(dir / "cb.pqcb")})
              .code == 0);
  const auto enc = run({"--json", "encode", "--input", str(dir / "img.ppm"), "--codebook", str(dir / "cb.pqcb"),
                        "--patch", "2", "--stride", "2", "--out", str(dir / "img.pqix")});
  REQUIRE(enc.code == 0);
  CHECK(json::parse(enc.out)["h"] == 4);
}
