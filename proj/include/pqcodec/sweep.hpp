#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pqcodec/core.hpp"
#include "pqcodec/trainer.hpp"

namespace pqcodec::sweep {

/// Fixed-seed mixture of anisotropic Gaussians. Columns are generated
/// independently and standardised, so every channel has zero mean and unit
/// variance whatever d is, and the first d channels of a wider dataset equal
/// the narrower one.
struct MixtureSpec {
  std::size_t n = 8192;
  std::size_t components = 64;
  std::uint64_t seed = 7;
  /// Share of per-channel variance carried by component means.
  double separation = 0.8;
  /// Component weights follow k^-zipf.
  double zipf = 1.0;
  /// Log-normal spread of a per-component scale shared by all channels.
  double scale_spread = 0.0;
};

VectorDataset make_trend_dataset(std::size_t d, const MixtureSpec& spec);

/// S expressed either as an absolute count or as d / divisor.
struct SubspaceRule {
  bool relative = true;
  std::size_t value = 1;

  static SubspaceRule parse(std::string_view text);
  std::optional<std::size_t> resolve(std::size_t d) const;
  std::string to_string() const;
};

struct DatasetSpec {
  enum class Kind { kGaussianMixture, kVectorFile, kImagePatches };
  Kind kind = Kind::kGaussianMixture;
  MixtureSpec mixture;
  std::filesystem::path path;
  std::size_t patch = 4;
  std::size_t stride = 4;
};

struct SweepSpec {
  std::vector<std::size_t> d_values;
  std::vector<SubspaceRule> subspaces;
  std::vector<std::size_t> k_values;
  std::vector<std::uint64_t> seeds;
  DatasetSpec dataset;
  TrainConfig train;
  double beta = 0.25;
  /// Grid cells run concurrently on this many threads.
  std::size_t workers = 1;
  /// When false, train_ms and match_ms are reported as 0 so that reports are
  /// byte-reproducible.
  bool record_timings = true;
  /// Relative tolerance on every monotonicity claim.
  double slack = 0.02;

  void validate() const;
};

/// Throws kInvalidInput with the parse location on malformed JSON or schema
/// violations.
SweepSpec parse_sweep_spec(std::string_view json_text);

/// d in {8,16,32}, S in {1,d/4,d/2,d}, K in {32,128}, seeds {1,2,3}.
SweepSpec trend_suite_spec();

struct SweepRecord {
  std::size_t d = 0;
  std::size_t subspaces = 0;
  std::size_t codebook_size = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double psnr_db = 0.0;
  double h_n_mean = 0.0;
  double p_n_mean = 0.0;
  double train_ms = 0.0;
  double match_ms = 0.0;

  std::vector<double> trace;
  /// Largest iteration-to-iteration increase in the training trace (<= 0 when
  /// monotone).
  double max_trace_increase = 0.0;
  double peak = 1.0;
  std::optional<ProductCodebook> codebook;
};

struct SkippedCell {
  std::size_t d = 0;
  std::string rule;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // sorted by (d, S, K, seed)
  std::vector<SkippedCell> skipped;
};

using RecordSink = std::function<void(const SweepRecord&)>;

/// Loads or generates the dataset used for dimensionality d.
VectorDataset load_sweep_dataset(const DatasetSpec& spec, std::size_t d);

/// Trains and evaluates every feasible (d, S, K, seed) cell. The sink sees
/// records in completion order, from one thread at a time.
SweepResult run_sweep(const SweepSpec& spec, const RecordSink& sink = {});

enum class ClaimStatus { kPass, kFail, kInsufficientData };
std::string_view to_string(ClaimStatus status);

struct ClaimVerdict {
  std::string id;
  std::string description;
  ClaimStatus status = ClaimStatus::kInsufficientData;
  /// Worst relative margin over all comparisons; >= 0 passes.
  double margin = 0.0;
  std::size_t comparisons = 0;
  std::vector<std::string> violations;
};

struct TrendVerdict {
  /// Claims "a" to "e".
  std::vector<ClaimVerdict> claims;
  /// Gain from S=d/2 to S=d below 25% of the gain from S=1 to S=d/2.
  /// Informational only.
  ClaimVerdict saturation;

  const ClaimVerdict& claim(std::string_view id) const;
  bool all_pass() const;
};

/// Evaluates the trend claims on per-cell medians across seeds.
TrendVerdict trend_checks(const std::vector<SweepRecord>& records, double slack = 0.02);

inline constexpr std::string_view kCsvHeader =
    "d,S,K,seed,mse,psnr_db,h_n_mean,p_n_mean,train_ms,match_ms";

/// Shortest decimal that parses back to the same double; "inf" for infinity.
std::string format_double(double v);
std::string records_to_csv(const std::vector<SweepRecord>& records);
std::string verdict_to_json(const TrendVerdict& verdict, std::size_t record_count);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path summary;
};

/// Writes <dir>/sweep.csv and <dir>/summary.json.
ReportFiles emit_report(const std::vector<SweepRecord>& records,
                        const std::filesystem::path& dir, double slack = 0.02);

}  // namespace pqcodec::sweep
