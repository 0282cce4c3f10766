#include "pqcodec/cli.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pqcodec/bench.hpp"
#include "pqcodec/diagnostics.hpp"
#include "pqcodec/io.hpp"
#include "pqcodec/linear_codec.hpp"
#include "pqcodec/quantiser.hpp"
#include "pqcodec/sweep.hpp"
#include "pqcodec/trainer.hpp"

namespace pqcodec::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
  bool json = false;
};

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  const Globals& globals() const { return g_; }
  std::ostream& out() { return out_; }

  void log(const std::string& line) {
    if (!g_.quiet) err_ << line << '\n';
  }
  /// Human-readable result text; suppressed in --json mode so stdout stays
  /// parseable.
  void say(const std::string& line) {
    if (!g_.json) out_ << line << '\n';
  }
  void emit(const json& doc) {
    if (g_.json) out_ << doc.dump() << '\n';
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
    case ErrorCode::kInvalidState:
      return kExitUsage;
    case ErrorCode::kNonFinite:
      return kExitNumeric;
    case ErrorCode::kIo:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kTruncated:
    case ErrorCode::kMalformed:
    case ErrorCode::kUnsupportedFormat:
      return kExitIo;
  }
  return kExitIo;
}

/// Re-throws configuration errors with the offending flag named.
template <typename Fn>
auto with_flag(const std::string& flag, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), flag + ": " + e.what());
  }
}

std::string format(double v) { return sweep::format_double(v); }

json usage_json(const std::vector<UsageStats>& usage) {
  json arr = json::array();
  for (const auto& u : usage) {
    arr.push_back({{"counts", u.counts},
                   {"entropy", u.entropy},
                   {"h_n", u.normalised_entropy},
                   {"perplexity", u.perplexity},
                   {"p_n", u.normalised_perplexity}});
  }
  return arr;
}

bool looks_like_pnm(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::optional<std::size_t> d;
  std::size_t subspaces = 0;
  std::size_t codebook_size = 0;
  double beta = 0.25;
  std::string mode = "batch-kmeans";
  std::size_t iterations = 25;
  std::size_t batch_size = 256;
  double learning_rate = 1.0;
  std::size_t revival_threshold = 1;
  std::size_t workers = 1;
  std::string out;
};

int cmd_train(const TrainArgs& a, Context& ctx) {
  const auto data = io::read_dataset(a.data);
  if (a.d && *a.d != data.d) {
    fail(ErrorCode::kInvalidInput, "--d=" + std::to_string(*a.d) + " does not match '" + a.data +
                                       "' (d=" + std::to_string(data.d) + ")");
  }
  const PQConfig cfg = with_flag("--subspaces/--codebook-size/--beta", [&] {
    return PQConfig(data.d, a.subspaces, a.codebook_size, a.beta);
  });
  TrainConfig tc;
  tc.mode = with_flag("--mode", [&] { return parse_train_mode(a.mode); });
  tc.iterations = a.iterations;
  tc.batch_size = a.batch_size;
  tc.learning_rate = a.learning_rate;
  tc.revival_threshold = a.revival_threshold;
  tc.workers = a.workers;
  tc.seed = ctx.globals().seed;
  with_flag("--iterations/--batch-size/--learning-rate", [&] {
    tc.validate();
    return 0;
  });

  ctx.log("training d=" + std::to_string(cfg.d()) + " S=" + std::to_string(cfg.subspaces()) +
          " K=" + std::to_string(cfg.codebook_size()) + " on " + std::to_string(data.n) +
          " vectors (" + std::string(to_string(tc.mode)) + ")");
  InitReport init;
  auto pc = init_codebooks(data, cfg, tc.seed, &init);
  if (init.any_padded()) ctx.log("warning: fewer distinct subvectors than K; padded codebooks");
  auto result = train_codebooks(data, std::move(pc), tc);
  io::write_codebook(result.codebook, a.out);

  const auto& rep = result.report;
  std::vector<double> h_n;
  for (const auto& u : rep.usage) h_n.push_back(u.normalised_entropy);
  ctx.emit({{"command", "train"},
            {"d", cfg.d()},
            {"S", cfg.subspaces()},
            {"K", cfg.codebook_size()},
            {"beta", cfg.beta()},
            {"mode", std::string(to_string(tc.mode))},
            {"iterations", tc.iterations},
            {"final_mse", rep.final_distortion},
            {"h_n", h_n},
            {"h_n_mean", mean_normalised_entropy(rep.usage)},
            {"p_n_mean", mean_normalised_perplexity(rep.usage)},
            {"revived", rep.revived},
            {"init_padded", init.padded},
            {"trace", rep.distortion_trace},
            {"out", a.out}});
  ctx.say("final MSE: " + format(rep.final_distortion));
  std::string line = "H_n per subspace:";
  for (double v : h_n) line += " " + format(v);
  ctx.say(line);
  ctx.say("mean H_n: " + format(mean_normalised_entropy(rep.usage)));
  ctx.say("wrote " + a.out);
  return kExitOk;
}

// ---- encode / decode -----------------------------------------------------------

struct EncodeArgs {
  std::string input;
  std::string codebook;
  std::string out;
  std::optional<std::size_t> grid_width;
  std::size_t patch = 1;
  std::size_t stride = 1;
};

int cmd_encode(const EncodeArgs& a, Context& ctx) {
  const auto pc = io::read_codebook(a.codebook);
  const auto bytes = io::read_file(a.input);
  LatentGrid grid;
  if (looks_like_pnm(bytes)) {
    const auto image = io::parse_pnm(bytes);
    const auto shape = with_flag("--patch", [&] { return io::patch_grid_shape(image, a.patch, a.stride); });
    grid = as_grid(io::extract_patches(image, a.patch, a.stride), shape.rows, shape.cols);
  } else {
    const auto ds = io::decode_dataset(bytes);
    const std::size_t w = a.grid_width.value_or(1);
    if (w == 0 || ds.n % w != 0) {
      fail(ErrorCode::kInvalidInput, "--grid-width=" + std::to_string(w) + " does not divide n=" +
                                         std::to_string(ds.n));
    }
    grid = as_grid(ds, ds.n / w, w);
  }
  if (grid.d != pc.config().d()) {
    fail(ErrorCode::kInvalidInput, "'" + a.input + "' has d=" + std::to_string(grid.d) +
                                       " but codebook '" + a.codebook + "' has d=" +
                                       std::to_string(pc.config().d()));
  }
  const auto result = pq_encode(grid, pc);
  io::pack_indices(result.indices, pc.config().codebook_size(), a.out);
  const std::size_t size = io::index_stream_size(grid.h, grid.w, pc.config().subspaces(),
                                                 pc.config().codebook_size());
  ctx.emit({{"command", "encode"},
            {"h", grid.h},
            {"w", grid.w},
            {"S", pc.config().subspaces()},
            {"K", pc.config().codebook_size()},
            {"bits_per_index", io::bits_per_index(pc.config().codebook_size())},
            {"distortion", result.distortion},
            {"bytes", size},
            {"out", a.out}});
  ctx.say("grid " + std::to_string(grid.h) + "x" + std::to_string(grid.w) + ", distortion (MSE): " +
          format(result.distortion));
  ctx.say("compressed size: " + std::to_string(size) + " bytes (28 + ceil(" +
          std::to_string(grid.h) + "*" + std::to_string(grid.w) + "*" +
          std::to_string(pc.config().subspaces()) + "*" +
          std::to_string(io::bits_per_index(pc.config().codebook_size())) + "/8))");
  return kExitOk;
}

struct DecodeArgs {
  std::string input;
  std::string codebook;
  std::string out;
};

int cmd_decode(const DecodeArgs& a, Context& ctx) {
  const auto pc = io::read_codebook(a.codebook);
  const auto packed = io::unpack_indices(a.input);
  if (packed.indices.subspaces != pc.config().subspaces() ||
      packed.codebook_size != pc.config().codebook_size()) {
    fail(ErrorCode::kInvalidInput,
         "'" + a.input + "' (S=" + std::to_string(packed.indices.subspaces) + ", K=" +
             std::to_string(packed.codebook_size) + ") does not match codebook '" + a.codebook +
             "' (S=" + std::to_string(pc.config().subspaces()) + ", K=" +
             std::to_string(pc.config().codebook_size()) + ")");
  }
  const auto z_q = pq_decode(packed.indices, pc);
  io::write_dataset(as_dataset(z_q), a.out);
  ctx.emit({{"command", "decode"},
            {"h", z_q.h},
            {"w", z_q.w},
            {"d", z_q.d},
            {"vectors", z_q.pixels()},
            {"out", a.out}});
  ctx.say("decoded " + std::to_string(z_q.pixels()) + " vectors of d=" + std::to_string(z_q.d) +
          " to " + a.out);
  return kExitOk;
}

// ---- stats ----------------------------------------------------------------------

struct StatsArgs {
  std::string indices;
  std::string codebook;
};

int cmd_stats(const StatsArgs& a, Context& ctx) {
  const auto pc = io::read_codebook(a.codebook);
  const auto packed = io::unpack_indices(a.indices);
  if (packed.indices.subspaces != pc.config().subspaces() ||
      packed.codebook_size != pc.config().codebook_size()) {
    fail(ErrorCode::kInvalidInput,
         "'" + a.indices + "' (S=" + std::to_string(packed.indices.subspaces) + ", K=" +
             std::to_string(packed.codebook_size) + ") is inconsistent with codebook '" +
             a.codebook + "' (S=" + std::to_string(pc.config().subspaces()) + ", K=" +
             std::to_string(pc.config().codebook_size()) + ")");
  }
  const auto usage = usage_stats(packed.indices, packed.codebook_size);
  ctx.emit({{"command", "stats"},
            {"S", pc.config().subspaces()},
            {"K", pc.config().codebook_size()},
            {"pixels", packed.indices.pixels()},
            {"subspaces", usage_json(usage)},
            {"h_n_mean", mean_normalised_entropy(usage)},
            {"p_n_mean", mean_normalised_perplexity(usage)}});
  for (std::size_t s = 0; s < usage.size(); ++s) {
    const auto& u = usage[s];
    std::size_t used = 0;
    for (auto c : u.counts) used += c > 0 ? 1 : 0;
    ctx.say("subspace " + std::to_string(s) + ": H_n=" + format(u.normalised_entropy) +
            " P_n=" + format(u.normalised_perplexity) + " used " + std::to_string(used) + "/" +
            std::to_string(u.counts.size()));
    std::string hist = "  counts:";
    for (auto c : u.counts) hist += " " + std::to_string(c);
    ctx.say(hist);
  }
  ctx.say("mean H_n=" + format(mean_normalised_entropy(usage)) +
          " mean P_n=" + format(mean_normalised_perplexity(usage)));
  return kExitOk;
}

// ---- sweep / bench ----------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::string out_dir;
  std::optional<std::size_t> workers;
};

int cmd_sweep(const SweepArgs& a, Context& ctx) {
  auto spec = sweep::parse_sweep_spec(read_text(a.spec));
  if (a.workers) spec.workers = *a.workers;

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + a.out_dir + "': " + ec.message());
  const fs::path partial = fs::path(a.out_dir) / "sweep.partial.csv";
  std::ofstream partial_out(partial, std::ios::trunc);
  if (!partial_out) fail(ErrorCode::kIo, "cannot open '" + partial.string() + "' for writing");
  partial_out << sweep::kCsvHeader << '\n' << std::flush;

  std::size_t done = 0;
  auto result = sweep::run_sweep(spec, [&](const sweep::SweepRecord& r) {
    const std::string row = sweep::records_to_csv({r});
    partial_out << row.substr(row.find('\n') + 1) << std::flush;
    ++done;
    ctx.log("[" + std::to_string(done) + "] d=" + std::to_string(r.d) + " S=" +
            std::to_string(r.subspaces) + " K=" + std::to_string(r.codebook_size) + " seed=" +
            std::to_string(r.seed) + " mse=" + format(r.mse));
  });
  for (const auto& s : result.skipped) ctx.log("skipped d=" + std::to_string(s.d) + ": " + s.reason);
  partial_out.close();

  const auto files = sweep::emit_report(result.records, a.out_dir, spec.slack);
  fs::remove(partial, ec);
  const auto verdict = sweep::trend_checks(result.records, spec.slack);
  if (ctx.globals().json) {
    ctx.out() << json::parse(sweep::verdict_to_json(verdict, result.records.size())).dump() << '\n';
  }
  ctx.say(std::to_string(result.records.size()) + " records -> " + files.csv.string());
  for (const auto& c : verdict.claims) {
    ctx.say("(" + c.id + ") " + c.description + ": " + std::string(sweep::to_string(c.status)) +
            (c.status == sweep::ClaimStatus::kInsufficientData ? "" : " (margin " + format(c.margin) + ")"));
  }
  ctx.say("saturation (informational): " + std::string(sweep::to_string(verdict.saturation.status)));
  return kExitOk;
}

struct BenchArgs {
  std::string configs;
  std::string out;
};

int cmd_bench(const BenchArgs& a, Context& ctx) {
  auto plan = bench::parse_bench_plan(read_text(a.configs));
  if (ctx.globals().seed_given) plan.options.seed = ctx.globals().seed;
  ctx.log("benchmarking " + std::to_string(plan.configs.size()) + " configs on a " +
          std::to_string(plan.options.h) + "x" + std::to_string(plan.options.w) + " grid");
  const auto records = bench::bench_matching(plan.configs, plan.options);
  write_text(a.out, bench::bench_to_csv(records));
  const auto scaling = bench::summarise_scaling(records);
  if (ctx.globals().json) {
    auto doc = json::parse(bench::scaling_to_json(scaling));
    doc["command"] = "bench";
    doc["out"] = a.out;
    ctx.out() << doc.dump() << '\n';
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    ctx.say("d=" + std::to_string(r.config.d) + " S=" + std::to_string(r.config.subspaces) +
            " K=" + std::to_string(r.config.codebook_size) + ": match " +
            format(r.match_ms_median) + " ms, decode " + format(r.decode_ms_median) +
            " ms, vs smallest S x" + format(scaling.subspace_overhead[i].measured_ratio) +
            " (model x" + format(scaling.subspace_overhead[i].model_ratio) + "), vs smallest K x" +
            format(scaling.codebook_scaling[i].measured_ratio) + " (model x" +
            format(scaling.codebook_scaling[i].model_ratio) + ")");
  }
  ctx.say("wrote " + a.out);
  return kExitOk;
}

// ---- extract ---------------------------------------------------------------------

struct ExtractArgs {
  std::string image;
  std::size_t patch = 4;
  std::size_t stride = 4;
  std::optional<std::size_t> pca_dim;
  std::string out;
};

int cmd_extract(const ExtractArgs& a, Context& ctx) {
  const auto image = io::read_pnm(a.image);
  auto ds = with_flag("--patch/--stride", [&] { return io::extract_patches(image, a.patch, a.stride); });
  bool truncated = false;
  double captured = 1.0;
  if (a.pca_dim) {
    const auto codec = with_flag("--pca-dim", [&] { return fit_linear_encoder(ds, *a.pca_dim); });
    truncated = codec.rank_truncated();
    captured = codec.captured_variance_ratio();
    if (truncated) ctx.log("warning: patch covariance is rank-deficient; padded with zero axes");
    ds = codec.project(ds);
  }
  io::write_dataset(ds, a.out);
  ctx.emit({{"command", "extract"},
            {"vectors", ds.n},
            {"d", ds.d},
            {"captured_variance", captured},
            {"rank_truncated", truncated},
            {"out", a.out}});
  ctx.say("extracted " + std::to_string(ds.n) + " vectors of d=" + std::to_string(ds.d) + " to " +
          a.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Product-quantisation codec: train, encode, decode and analyse codebooks"};
  app.name("pqcodec");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed (u64)");
  app.add_flag("--quiet", g.quiet, "Suppress log output on stderr");
  app.add_flag("--json", g.json, "Print machine-readable JSON on stdout");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Learn a product codebook from a PQVD dataset");
  train->add_option("--data", ta.data, "Input dataset (PQVD)")->required();
  train->add_option("--d", ta.d, "Expected dimensionality (must match the dataset)");
  train->add_option("--subspaces", ta.subspaces, "Number of subspaces S")->required();
  train->add_option("--codebook-size", ta.codebook_size, "Codewords per subspace K")->required();
  train->add_option("--beta", ta.beta, "Commitment weight")->capture_default_str();
  train->add_option("--mode", ta.mode, "batch-kmeans | sgd-commitment")->capture_default_str();
  train->add_option("--iterations", ta.iterations, "Training iterations")->capture_default_str();
  train->add_option("--batch-size", ta.batch_size, "Minibatch size (sgd mode)")->capture_default_str();
  train->add_option("--learning-rate", ta.learning_rate, "Step size (sgd mode)")->capture_default_str();
  train->add_option("--revival-threshold", ta.revival_threshold,
                    "Re-seed codewords used fewer times per epoch")->capture_default_str();
  train->add_option("--workers", ta.workers, "Threads across subspaces")->capture_default_str();
  train->add_option("--out", ta.out, "Output codebook (PQCB)")->required();

  EncodeArgs ea;
  auto* encode = app.add_subcommand("encode", "Quantise latents or an image into a PQIX bitstream");
  encode->add_option("--input", ea.input, "PQVD dataset or P5/P6 image")->required();
  encode->add_option("--codebook", ea.codebook, "Codebook (PQCB)")->required();
  encode->add_option("--out", ea.out, "Output bitstream (PQIX)")->required();
  encode->add_option("--grid-width", ea.grid_width, "Grid width for PQVD input (default 1)");
  encode->add_option("--patch", ea.patch, "Patch size for image input")->capture_default_str();
  encode->add_option("--stride", ea.stride, "Patch stride for image input")->capture_default_str();

  DecodeArgs da;
  auto* decode = app.add_subcommand("decode", "Reconstruct latents from a PQIX bitstream");
  decode->add_option("--input", da.input, "Bitstream (PQIX)")->required();
  decode->add_option("--codebook", da.codebook, "Codebook (PQCB)")->required();
  decode->add_option("--out", da.out, "Output dataset (PQVD)")->required();

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Codebook utilisation of a PQIX bitstream");
  stats->add_option("--indices", sa.indices, "Bitstream (PQIX)")->required();
  stats->add_option("--codebook", sa.codebook, "Codebook (PQCB)")->required();

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a (d, S, K) grid experiment");
  sweep_cmd->add_option("--spec", wa.spec, "Sweep spec (JSON)")->required();
  sweep_cmd->add_option("--out-dir", wa.out_dir, "Directory for sweep.csv and summary.json")->required();
  sweep_cmd->add_option("--workers", wa.workers, "Override the spec's worker count");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Time codebook matching and decoding");
  bench_cmd->add_option("--configs", ba.configs, "Bench plan (JSON)")->required();
  bench_cmd->add_option("--out", ba.out, "Output CSV")->required();

  ExtractArgs xa;
  auto* extract = app.add_subcommand("extract", "Cut a P5/P6 image into patch vectors");
  extract->add_option("--image", xa.image, "Input image (P5/P6)")->required();
  extract->add_option("--patch", xa.patch, "Patch size")->capture_default_str();
  extract->add_option("--stride", xa.stride, "Patch stride")->capture_default_str();
  extract->add_option("--pca-dim", xa.pca_dim, "Project patches onto this many principal axes");
  extract->add_option("--out", xa.out, "Output dataset (PQVD)")->required();

  std::vector<const char*> argv{"pqcodec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  g.seed_given = app.count("--seed") > 0;

  Context ctx(g, out, err);
  try {
    if (train->parsed()) return cmd_train(ta, ctx);
    if (encode->parsed()) return cmd_encode(ea, ctx);
    if (decode->parsed()) return cmd_decode(da, ctx);
    if (stats->parsed()) return cmd_stats(sa, ctx);
    if (sweep_cmd->parsed()) return cmd_sweep(wa, ctx);
    if (bench_cmd->parsed()) return cmd_bench(ba, ctx);
    if (extract->parsed()) return cmd_extract(xa, ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumeric;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace pqcodec::cli
