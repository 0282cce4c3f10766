#include "pqcodec/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "pqcodec/diagnostics.hpp"
#include "pqcodec/io.hpp"
#include "pqcodec/linear_codec.hpp"
#include "pqcodec/quantiser.hpp"
#include "scan.hpp"

namespace pqcodec::sweep {
namespace {

using json = nlohmann::json;
using detail::mix_seed;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

// ---- dataset -------------------------------------------------------------------

VectorDataset make_trend_dataset(std::size_t d, const MixtureSpec& spec) {
  require(d >= 1 && spec.n >= 2 && spec.components >= 1, ErrorCode::kInvalidInput,
          "mixture needs d >= 1, n >= 2 and at least one component");
  require(spec.separation >= 0.0 && spec.separation <= 1.0, ErrorCode::kInvalidInput,
          "mixture separation must be in [0, 1]");

  std::vector<double> weights(spec.components);
  for (std::size_t m = 0; m < spec.components; ++m) {
    weights[m] = std::pow(static_cast<double>(m + 1), -spec.zipf);
  }
  std::mt19937_64 label_rng(mix_seed(spec.seed, 0));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> labels(spec.n);
  for (auto& l : labels) l = pick(label_rng);
  std::vector<double> component_scale(spec.components);
  {
    std::mt19937_64 scale_rng(mix_seed(spec.seed, 0x5ca1e));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& c : component_scale) c = std::exp(spec.scale_spread * normal(scale_rng));
  }

  std::vector<float> values(spec.n * d);
  std::vector<double> column(spec.n);
  std::vector<double> means(spec.components);
  std::vector<double> scales(spec.components);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::mt19937_64 rng(mix_seed(spec.seed, 1 + j));
    for (std::size_t m = 0; m < spec.components; ++m) {
      means[m] = std::sqrt(spec.separation) * normal(rng);
      scales[m] = std::sqrt(1.0 - spec.separation) * component_scale[m] *
                  std::exp(0.5 * normal(rng));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      column[i] = means[labels[i]] + scales[labels[i]] * normal(rng);
      sum += column[i];
    }
    const double mu = sum / static_cast<double>(spec.n);
    double var = 0.0;
    for (double v : column) var += (v - mu) * (v - mu);
    var /= static_cast<double>(spec.n);
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      values[i * d + j] = static_cast<float>((column[i] - mu) * inv);
    }
  }
  return VectorDataset(spec.n, d, std::move(values));
}

VectorDataset load_sweep_dataset(const DatasetSpec& spec, std::size_t d) {
  switch (spec.kind) {
    case DatasetSpec::Kind::kGaussianMixture:
      return make_trend_dataset(d, spec.mixture);
    case DatasetSpec::Kind::kVectorFile: {
      auto ds = io::read_dataset(spec.path);
      if (ds.d == d) return ds;
      require(ds.d > d, ErrorCode::kInvalidInput,
              "dataset '" + spec.path.string() + "' has d=" + std::to_string(ds.d) +
                  " < " + std::to_string(d));
      return fit_linear_encoder(ds, d).project(ds);
    }
    case DatasetSpec::Kind::kImagePatches: {
      const auto patches = io::extract_patches(io::read_pnm(spec.path), spec.patch, spec.stride);
      if (patches.d == d) return patches;
      require(patches.d > d, ErrorCode::kInvalidInput,
              "patch dimension " + std::to_string(patches.d) + " < " + std::to_string(d));
      return fit_linear_encoder(patches, d).project(patches);
    }
  }
  fail(ErrorCode::kInvalidInput, "unknown dataset kind");
}

// ---- spec ------------------------------------------------------------------------

SubspaceRule SubspaceRule::parse(std::string_view text) {
  auto number = [&](std::string_view digits) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    require(ec == std::errc() && ptr == digits.data() + digits.size() && v >= 1,
            ErrorCode::kInvalidInput, "invalid subspace rule '" + std::string(text) + "'");
    return v;
  };
  if (text == "d") return {true, 1};
  if (text.starts_with("d/")) return {true, number(text.substr(2))};
  return {false, number(text)};
}

std::optional<std::size_t> SubspaceRule::resolve(std::size_t d) const {
  if (relative) {
    if (d % value != 0) return std::nullopt;
    return d / value;
  }
  if (value == 0 || d % value != 0) return std::nullopt;
  return value;
}

std::string SubspaceRule::to_string() const {
  if (!relative) return std::to_string(value);
  return value == 1 ? "d" : "d/" + std::to_string(value);
}

void SweepSpec::validate() const {
  require(!d_values.empty() && !subspaces.empty() && !k_values.empty() && !seeds.empty(),
          ErrorCode::kInvalidInput, "sweep grid is empty");
  for (std::size_t d : d_values) require(d >= 1, ErrorCode::kInvalidInput, "d must be >= 1");
  for (std::size_t k : k_values) require(k >= 1, ErrorCode::kInvalidInput, "K must be >= 1");
  require(beta >= 0.0 && std::isfinite(beta), ErrorCode::kInvalidInput, "beta must be >= 0");
  require(slack >= 0.0 && slack < 1.0, ErrorCode::kInvalidInput, "slack must be in [0, 1)");
  require(workers >= 1, ErrorCode::kInvalidInput, "workers must be >= 1");
  train.validate();
}

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  require(obj.is_object(), ErrorCode::kInvalidInput, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::kInvalidInput, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
std::vector<T> unsigned_list(const json& root, const char* key) {
  require(root.contains(key), ErrorCode::kInvalidInput,
          std::string("sweep spec: missing '") + key + "'");
  const auto& arr = root.at(key);
  require(arr.is_array() && !arr.empty(), ErrorCode::kInvalidInput,
          std::string("sweep spec: '") + key + "' must be a non-empty array");
  std::vector<T> out;
  for (const auto& v : arr) {
    require(v.is_number_unsigned(), ErrorCode::kInvalidInput,
            std::string("sweep spec: '") + key + "' entries must be non-negative integers");
    out.push_back(v.get<T>());
  }
  return out;
}

}  // namespace

SweepSpec parse_sweep_spec(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidInput,
         "sweep spec: JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    check_keys(root,
               {"d", "S", "K", "seeds", "dataset", "train", "beta", "workers",
                "record_timings", "slack"},
               "sweep spec");
    SweepSpec spec;
    spec.d_values = unsigned_list<std::size_t>(root, "d");
    spec.k_values = unsigned_list<std::size_t>(root, "K");
    spec.seeds = unsigned_list<std::uint64_t>(root, "seeds");
    require(root.contains("S") && root.at("S").is_array() && !root.at("S").empty(),
            ErrorCode::kInvalidInput, "sweep spec: 'S' must be a non-empty array");
    for (const auto& v : root.at("S")) {
      if (v.is_number_unsigned()) {
        spec.subspaces.push_back({false, v.get<std::size_t>()});
      } else {
        require(v.is_string(), ErrorCode::kInvalidInput,
                "sweep spec: 'S' entries must be integers or \"d/N\" strings");
        spec.subspaces.push_back(SubspaceRule::parse(v.get<std::string>()));
      }
    }
    if (root.contains("dataset")) {
      const auto& ds = root.at("dataset");
      check_keys(ds,
                 {"type", "n", "components", "seed", "separation", "zipf", "scale_spread",
                  "path", "patch", "stride"},
                 "dataset");
      const std::string type = ds.value("type", "gaussian_mixture");
      if (type == "gaussian_mixture") {
        spec.dataset.kind = DatasetSpec::Kind::kGaussianMixture;
        auto& m = spec.dataset.mixture;
        m.n = ds.value("n", m.n);
        m.components = ds.value("components", m.components);
        m.seed = ds.value("seed", m.seed);
        m.separation = ds.value("separation", m.separation);
        m.zipf = ds.value("zipf", m.zipf);
        m.scale_spread = ds.value("scale_spread", m.scale_spread);
      } else if (type == "vectors" || type == "image") {
        require(ds.contains("path"), ErrorCode::kInvalidInput,
                "dataset of type '" + type + "' needs a path");
        spec.dataset.kind = type == "vectors" ? DatasetSpec::Kind::kVectorFile
                                              : DatasetSpec::Kind::kImagePatches;
        spec.dataset.path = ds.at("path").get<std::string>();
        spec.dataset.patch = ds.value("patch", spec.dataset.patch);
        spec.dataset.stride = ds.value("stride", spec.dataset.stride);
      } else {
        fail(ErrorCode::kInvalidInput, "unknown dataset type '" + type + "'");
      }
    }
    if (root.contains("train")) {
      const auto& tr = root.at("train");
      check_keys(tr, {"mode", "iterations", "batch_size", "learning_rate", "revival_threshold"},
                 "train");
      spec.train.mode = parse_train_mode(tr.value("mode", std::string("batch-kmeans")));
      spec.train.iterations = tr.value("iterations", spec.train.iterations);
      spec.train.batch_size = tr.value("batch_size", spec.train.batch_size);
      spec.train.learning_rate = tr.value("learning_rate", spec.train.learning_rate);
      spec.train.revival_threshold = tr.value("revival_threshold", spec.train.revival_threshold);
    }
    spec.beta = root.value("beta", spec.beta);
    spec.workers = root.value("workers", spec.workers);
    spec.record_timings = root.value("record_timings", spec.record_timings);
    spec.slack = root.value("slack", spec.slack);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("sweep spec: ") + e.what());
  }
}

SweepSpec trend_suite_spec() {
  SweepSpec spec;
  spec.d_values = {8, 16, 32};
  spec.subspaces = {{false, 1}, {true, 4}, {true, 2}, {true, 1}};
  spec.k_values = {32, 128};
  spec.seeds = {1, 2, 3};
  spec.train.iterations = 20;
  spec.dataset.mixture.n = 4096;
  spec.dataset.mixture.components = 16;
  spec.dataset.mixture.separation = 0.9;
  spec.dataset.mixture.zipf = 1.0;
  spec.dataset.mixture.scale_spread = 0.5;
  return spec;
}

// ---- runner -------------------------------------------------------------------

namespace {

struct Cell {
  std::size_t d;
  std::size_t subspaces;
  std::size_t codebook_size;
  std::uint64_t seed;
};

SweepRecord run_cell(const Cell& cell, const VectorDataset& data, const SweepSpec& spec) {
  const PQConfig cfg(cell.d, cell.subspaces, cell.codebook_size, spec.beta);
  TrainConfig tc = spec.train;
  tc.seed = cell.seed;
  tc.workers = 1;

  const auto train_start = Clock::now();
  auto init = init_codebooks(data, cfg, cell.seed);
  auto trained = train_codebooks(data, std::move(init), tc);
  const double train_ms = elapsed_ms(train_start);

  const auto grid = as_grid(data, data.n, 1);
  const auto match_start = Clock::now();
  const auto encoded = pq_encode(grid, trained.codebook);
  const double match_ms = elapsed_ms(match_start);

  const auto [lo, hi] = std::minmax_element(data.data.begin(), data.data.end());
  const double peak = std::max(static_cast<double>(*hi) - static_cast<double>(*lo), 1e-12);
  const auto usage = usage_stats(encoded.indices, cfg.codebook_size());

  SweepRecord rec;
  rec.d = cell.d;
  rec.subspaces = cell.subspaces;
  rec.codebook_size = cell.codebook_size;
  rec.seed = cell.seed;
  rec.mse = encoded.distortion;
  rec.psnr_db = psnr_from_mse(encoded.distortion, peak);
  rec.h_n_mean = mean_normalised_entropy(usage);
  rec.p_n_mean = mean_normalised_perplexity(usage);
  rec.train_ms = spec.record_timings ? train_ms : 0.0;
  rec.match_ms = spec.record_timings ? match_ms : 0.0;
  rec.trace = trained.report.distortion_trace;
  rec.max_trace_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rec.trace.size(); ++i) {
    rec.max_trace_increase = std::max(rec.max_trace_increase, rec.trace[i] - rec.trace[i - 1]);
  }
  if (rec.trace.size() < 2) rec.max_trace_increase = 0.0;
  rec.peak = peak;
  rec.codebook = std::move(trained.codebook);
  return rec;
}

auto record_key(const SweepRecord& r) {
  return std::tuple(r.d, r.subspaces, r.codebook_size, r.seed);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const RecordSink& sink) {
  spec.validate();
  SweepResult result;

  std::vector<Cell> cells;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::uint64_t>> seen;
  std::vector<std::size_t> ds_values;
  for (std::size_t d : spec.d_values) {
    if (std::find(ds_values.begin(), ds_values.end(), d) == ds_values.end()) {
      ds_values.push_back(d);
    }
  }
  for (std::size_t d : ds_values) {
    for (const auto& rule : spec.subspaces) {
      const auto s = rule.resolve(d);
      if (!s) {
        result.skipped.push_back(
            {d, rule.to_string(), "S=" + rule.to_string() + " is not an integer divisor of d=" +
                                      std::to_string(d)});
        continue;
      }
      for (std::size_t k : spec.k_values) {
        for (std::uint64_t seed : spec.seeds) {
          if (seen.insert({d, *s, k, seed}).second) cells.push_back({d, *s, k, seed});
        }
      }
    }
  }

  std::map<std::size_t, VectorDataset> datasets;
  for (const auto& c : cells) {
    if (!datasets.contains(c.d)) datasets.emplace(c.d, load_sweep_dataset(spec.dataset, c.d));
  }

  std::mutex mu;
  std::exception_ptr error;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size() && !stop; i = next++) {
      try {
        auto rec = run_cell(cells[i], datasets.at(cells[i].d), spec);
        std::lock_guard lock(mu);
        if (sink) sink(rec);
        result.records.push_back(std::move(rec));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  {
    const std::size_t n = std::clamp<std::size_t>(spec.workers, 1, std::max<std::size_t>(1, cells.size()));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  std::sort(result.records.begin(), result.records.end(),
            [](const SweepRecord& a, const SweepRecord& b) { return record_key(a) < record_key(b); });
  return result;
}

// ---- trend claims -------------------------------------------------------------

std::string_view to_string(ClaimStatus status) {
  switch (status) {
    case ClaimStatus::kPass: return "pass";
    case ClaimStatus::kFail: return "fail";
    case ClaimStatus::kInsufficientData: return "insufficient data";
  }
  return "unknown";
}

const ClaimVerdict& TrendVerdict::claim(std::string_view id) const {
  for (const auto& c : claims) {
    if (c.id == id) return c;
  }
  fail(ErrorCode::kInvalidInput, "no claim '" + std::string(id) + "'");
}

bool TrendVerdict::all_pass() const {
  return std::all_of(claims.begin(), claims.end(),
                     [](const ClaimVerdict& c) { return c.status == ClaimStatus::kPass; });
}

namespace {

struct CellMedians {
  double mse = 0.0;
  double h_n = 0.0;
  double p_n = 0.0;
};

using CellKey = std::tuple<std::size_t, std::size_t, std::size_t>;  // d, S, K

std::map<CellKey, CellMedians> medians_by_cell(const std::vector<SweepRecord>& records) {
  std::map<CellKey, std::vector<const SweepRecord*>> groups;
  for (const auto& r : records) groups[{r.d, r.subspaces, r.codebook_size}].push_back(&r);
  std::map<CellKey, CellMedians> out;
  for (const auto& [key, rs] : groups) {
    std::vector<double> mse, h, p;
    for (const auto* r : rs) {
      mse.push_back(r->mse);
      h.push_back(r->h_n_mean);
      p.push_back(r->p_n_mean);
    }
    out[key] = {median(mse), median(h), median(p)};
  }
  return out;
}

// Accumulates comparisons for one claim.
class ClaimBuilder {
 public:
  ClaimBuilder(std::string id, std::string description, double slack)
      : slack_(slack) {
    verdict_.id = std::move(id);
    verdict_.description = std::move(description);
    verdict_.margin = std::numeric_limits<double>::infinity();
  }

  /// Requires `later <= earlier * (1 + slack)`.
  void not_above(double earlier, double later, const std::string& where) {
    record((earlier - later) / scale(earlier) + slack_, where, earlier, later);
  }
  /// Requires `later >= earlier * (1 - slack)`.
  void not_below(double earlier, double later, const std::string& where) {
    record((later - earlier) / scale(earlier) + slack_, where, earlier, later);
  }

  ClaimVerdict finish() {
    if (verdict_.comparisons == 0) {
      verdict_.status = ClaimStatus::kInsufficientData;
      verdict_.margin = 0.0;
    } else {
      verdict_.status = verdict_.violations.empty() ? ClaimStatus::kPass : ClaimStatus::kFail;
    }
    return verdict_;
  }

 private:
  static double scale(double v) { return std::max(std::abs(v), 1e-300); }

  void record(double margin, const std::string& where, double a, double b) {
    ++verdict_.comparisons;
    verdict_.margin = std::min(verdict_.margin, margin);
    if (margin < 0.0) {
      std::ostringstream msg;
      msg << where << ": " << format_double(a) << " -> " << format_double(b);
      verdict_.violations.push_back(msg.str());
    }
  }

  double slack_;
  ClaimVerdict verdict_;
};

std::string cell_name(std::size_t d, std::size_t s, std::size_t k) {
  return "d=" + std::to_string(d) + ",S=" + std::to_string(s) + ",K=" + std::to_string(k);
}

}  // namespace

TrendVerdict trend_checks(const std::vector<SweepRecord>& records, double slack) {
  const auto cells = medians_by_cell(records);
  std::set<std::size_t> ds, ks;
  for (const auto& [key, _] : cells) {
    ds.insert(std::get<0>(key));
    ks.insert(std::get<2>(key));
  }
  auto find = [&](std::size_t d, std::size_t s, std::size_t k) -> const CellMedians* {
    const auto it = cells.find({d, s, k});
    return it == cells.end() ? nullptr : &it->second;
  };

  TrendVerdict verdict;

  // (a) VQ degrades with d; (b) PQ at S=d/2 improves with d.
  ClaimBuilder a("a", "VQ (S=1) MSE non-decreasing in d", slack);
  ClaimBuilder b("b", "PQ (S=d/2) MSE non-increasing in d", slack);
  for (std::size_t k : ks) {
    const CellMedians* prev_vq = nullptr;
    const CellMedians* prev_pq = nullptr;
    std::size_t prev_vq_d = 0, prev_pq_d = 0;
    for (std::size_t d : ds) {
      if (const auto* c = find(d, 1, k)) {
        if (prev_vq) {
          a.not_below(prev_vq->mse, c->mse,
                      "K=" + std::to_string(k) + " d=" + std::to_string(prev_vq_d) + "->" +
                          std::to_string(d));
        }
        prev_vq = c;
        prev_vq_d = d;
      }
      if (d % 2 == 0) {
        if (const auto* c = find(d, d / 2, k)) {
          if (prev_pq) {
            b.not_above(prev_pq->mse, c->mse,
                        "K=" + std::to_string(k) + " d=" + std::to_string(prev_pq_d) + "->" +
                            std::to_string(d));
          }
          prev_pq = c;
          prev_pq_d = d;
        }
      }
    }
  }

  // (c) MSE non-increasing along S in {1, d/8, d/4, d/2}; (d) H_n lowest at S=1.
  ClaimBuilder c("c", "MSE non-increasing in S up to d/2", slack);
  ClaimBuilder dclaim("d", "mean H_n minimal at S=1", slack);
  ClaimBuilder sat("saturation", "gain S=d/2->d below 25% of gain S=1->d/2", 0.0);
  for (std::size_t d : ds) {
    for (std::size_t k : ks) {
      std::vector<std::size_t> ladder{1};
      for (std::size_t div : {8u, 4u, 2u}) {
        if (d % div == 0 && d / div > ladder.back()) ladder.push_back(d / div);
      }
      const CellMedians* prev = nullptr;
      std::size_t prev_s = 0;
      for (std::size_t s : ladder) {
        if (const auto* cell = find(d, s, k)) {
          if (prev) {
            c.not_above(prev->mse, cell->mse,
                        cell_name(d, prev_s, k) + " -> S=" + std::to_string(s));
          }
          prev = cell;
          prev_s = s;
        }
      }
      if (const auto* vq = find(d, 1, k)) {
        for (const auto& [key, other] : cells) {
          const auto [od, os, ok] = key;
          if (od != d || ok != k || os == 1) continue;
          dclaim.not_below(vq->h_n, other.h_n, cell_name(d, 1, k) + " vs S=" + std::to_string(os));
        }
        if (d % 2 == 0 && d > 2) {
          const auto* half = find(d, d / 2, k);
          const auto* full = find(d, d, k);
          if (half && full) {
            const double gain_lo = vq->mse - half->mse;
            const double gain_hi = half->mse - full->mse;
            // margin expressed relative to the low gain.
            sat.not_above(0.25 * gain_lo, gain_hi, cell_name(d, d / 2, k));
          }
        }
      }
    }
  }

  // (e) P_n non-increasing in K at fixed (d, S).
  ClaimBuilder e("e", "mean P_n non-increasing in K", slack);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, double>>> by_ds;
  for (const auto& [key, cell] : cells) {
    by_ds[{std::get<0>(key), std::get<1>(key)}].push_back({std::get<2>(key), cell.p_n});
  }
  for (const auto& [ds_key, series] : by_ds) {
    for (std::size_t i = 1; i < series.size(); ++i) {
      e.not_above(series[i - 1].second, series[i].second,
                  "d=" + std::to_string(ds_key.first) + ",S=" + std::to_string(ds_key.second) +
                      " K=" + std::to_string(series[i - 1].first) + "->" +
                      std::to_string(series[i].first));
    }
  }

  verdict.claims = {a.finish(), b.finish(), c.finish(), dclaim.finish(), e.finish()};
  verdict.saturation = sat.finish();
  return verdict;
}

// ---- reports --------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.d) + ',' + std::to_string(r.subspaces) + ',' +
           std::to_string(r.codebook_size) + ',' + std::to_string(r.seed) + ',' +
           format_double(r.mse) + ',' + format_double(r.psnr_db) + ',' +
           format_double(r.h_n_mean) + ',' + format_double(r.p_n_mean) + ',' +
           format_double(r.train_ms) + ',' + format_double(r.match_ms) + '\n';
  }
  return out;
}

namespace {

json claim_json(const ClaimVerdict& c) {
  json j;
  j["id"] = c.id;
  j["description"] = c.description;
  j["status"] = std::string(to_string(c.status));
  j["margin"] = c.margin;
  j["comparisons"] = c.comparisons;
  j["violations"] = c.violations;
  return j;
}

}  // namespace

std::string verdict_to_json(const TrendVerdict& verdict, std::size_t record_count) {
  json root;
  root["records"] = record_count;
  root["claims"] = json::array();
  for (const auto& c : verdict.claims) root["claims"].push_back(claim_json(c));
  root["saturation"] = claim_json(verdict.saturation);
  root["all_pass"] = verdict.all_pass();
  return root.dump(2) + "\n";
}

ReportFiles emit_report(const std::vector<SweepRecord>& records,
                        const std::filesystem::path& dir, double slack) {
  require(!records.empty(), ErrorCode::kInvalidInput, "no records to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  ReportFiles files{dir / "sweep.csv", dir / "summary.json"};
  const std::string csv = records_to_csv(records);
  io::write_file(files.csv, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
  const std::string summary = verdict_to_json(trend_checks(records, slack), records.size());
  io::write_file(files.summary,
                 std::span(reinterpret_cast<const std::uint8_t*>(summary.data()), summary.size()));
  return files;
}

}  // namespace pqcodec::sweep
