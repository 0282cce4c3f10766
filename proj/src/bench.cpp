#include "pqcodec/bench.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <random>

#include <json.hpp>

#include "pqcodec/quantiser.hpp"
#include "pqcodec/sweep.hpp"
#include "scan.hpp"

namespace pqcodec::bench {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

template <typename T>
void do_not_optimize(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

LatentGrid synthetic_latents(std::size_t h, std::size_t w, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(detail::mix_seed(seed, d));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> values(h * w * d);
  for (auto& v : values) v = normal(rng);
  return LatentGrid(h, w, d, std::move(values));
}

ProductCodebook synthetic_codebook(const BenchConfig& c, std::uint64_t seed) {
  const PQConfig cfg(c.d, c.subspaces, c.codebook_size);
  std::mt19937_64 rng(detail::mix_seed(seed ^ 0xc0deb00cULL, c.d * 1000003ULL + c.subspaces * 1009ULL + c.codebook_size));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<SubCodebook> books;
  for (std::size_t s = 0; s < cfg.subspaces(); ++s) {
    std::vector<float> entries(cfg.codebook_size() * cfg.sub_dim());
    for (auto& v : entries) v = normal(rng);
    books.emplace_back(cfg.codebook_size(), cfg.sub_dim(), std::move(entries));
  }
  return ProductCodebook(cfg, std::move(books));
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<double> encode_samples(const LatentGrid& latents, const ProductCodebook& pc,
                                   std::size_t warmup, std::size_t reps, std::size_t workers) {
  for (std::size_t i = 0; i < warmup; ++i) {
    const auto idx = pq_assign(latents, pc, workers);
    do_not_optimize(idx.indices.data());
  }
  std::vector<double> samples;
  samples.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    samples.push_back(time_ms([&] {
      const auto idx = pq_assign(latents, pc, workers);
      do_not_optimize(idx.indices.data());
    }));
  }
  return samples;
}

}  // namespace

void BenchOptions::validate() const {
  require(h >= 1 && w >= 1, ErrorCode::kInvalidInput, "bench grid must be non-empty");
  require(reps >= 5, ErrorCode::kInvalidInput, "bench needs at least 5 timed repetitions");
  require(parallel_workers >= 1, ErrorCode::kInvalidInput, "parallel_workers must be >= 1");
}

std::vector<BenchRecord> bench_matching(const std::vector<BenchConfig>& configs,
                                        const BenchOptions& options) {
  options.validate();
  std::vector<BenchRecord> out;
  std::map<std::size_t, LatentGrid> latents_by_d;
  for (const auto& c : configs) {
    const ProductCodebook pc = synthetic_codebook(c, options.seed);
    auto it = latents_by_d.find(c.d);
    if (it == latents_by_d.end()) {
      it = latents_by_d.emplace(c.d, synthetic_latents(options.h, options.w, c.d, options.seed)).first;
    }
    const LatentGrid& latents = it->second;

    BenchRecord rec;
    rec.config = c;
    rec.h = options.h;
    rec.w = options.w;
    rec.warmup = options.warmup;
    rec.reps = options.reps;
    rec.match_samples_ms = encode_samples(latents, pc, options.warmup, options.reps, 1);
    rec.match_ms_median = median(rec.match_samples_ms);

    const IndexGrid indices = pq_assign(latents, pc);
    for (std::size_t i = 0; i < options.warmup; ++i) {
      const auto z = pq_decode(indices, pc);
      do_not_optimize(z.data.data());
    }
    for (std::size_t i = 0; i < options.reps; ++i) {
      rec.decode_samples_ms.push_back(time_ms([&] {
        const auto z = pq_decode(indices, pc);
        do_not_optimize(z.data.data());
      }));
    }
    rec.decode_ms_median = median(rec.decode_samples_ms);
    rec.model_macs_per_pixel = static_cast<double>(c.codebook_size * c.d);
    if (options.parallel_workers > 1) {
      rec.parallel_match_ms_median = median(
          encode_samples(latents, pc, options.warmup, options.reps, options.parallel_workers));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string bench_to_csv(const std::vector<BenchRecord>& records) {
  std::size_t max_samples = 0;
  for (const auto& r : records) max_samples = std::max(max_samples, r.match_samples_ms.size());
  std::string out = "d,S,K,h,w,match_ms_median,decode_ms_median";
  for (std::size_t i = 0; i < max_samples; ++i) out += ",sample_" + std::to_string(i);
  out += '\n';
  using sweep::format_double;
  for (const auto& r : records) {
    out += std::to_string(r.config.d) + ',' + std::to_string(r.config.subspaces) + ',' +
           std::to_string(r.config.codebook_size) + ',' + std::to_string(r.h) + ',' +
           std::to_string(r.w) + ',' + format_double(r.match_ms_median) + ',' +
           format_double(r.decode_ms_median);
    for (std::size_t i = 0; i < max_samples; ++i) {
      out += ',';
      if (i < r.match_samples_ms.size()) out += format_double(r.match_samples_ms[i]);
    }
    out += '\n';
  }
  return out;
}

ScalingSummary summarise_scaling(const std::vector<BenchRecord>& records) {
  ScalingSummary summary;
  std::map<std::pair<std::size_t, std::size_t>, const BenchRecord*> base_s;  // (d,K) -> min S
  std::map<std::pair<std::size_t, std::size_t>, const BenchRecord*> base_k;  // (d,S) -> min K
  for (const auto& r : records) {
    auto& bs = base_s[{r.config.d, r.config.codebook_size}];
    if (!bs || r.config.subspaces < bs->config.subspaces) bs = &r;
    auto& bk = base_k[{r.config.d, r.config.subspaces}];
    if (!bk || r.config.codebook_size < bk->config.codebook_size) bk = &r;
  }
  for (const auto& r : records) {
    const auto* bs = base_s.at({r.config.d, r.config.codebook_size});
    summary.subspace_overhead.push_back(
        {r.config, r.match_ms_median / bs->match_ms_median,
         r.model_macs_per_pixel / bs->model_macs_per_pixel});
    const auto* bk = base_k.at({r.config.d, r.config.subspaces});
    summary.codebook_scaling.push_back(
        {r.config, r.match_ms_median / bk->match_ms_median,
         r.model_macs_per_pixel / bk->model_macs_per_pixel});
  }
  return summary;
}

std::string scaling_to_json(const ScalingSummary& summary) {
  auto rows = [](const std::vector<ScalingRow>& v) {
    json arr = json::array();
    for (const auto& r : v) {
      arr.push_back({{"d", r.config.d},
                     {"S", r.config.subspaces},
                     {"K", r.config.codebook_size},
                     {"measured_ratio", r.measured_ratio},
                     {"model_ratio", r.model_ratio}});
    }
    return arr;
  };
  json root;
  root["subspace_overhead"] = rows(summary.subspace_overhead);
  root["codebook_scaling"] = rows(summary.codebook_scaling);
  return root.dump(2) + "\n";
}

double grid_doubling_ratio(const BenchConfig& config, const BenchOptions& options) {
  options.validate();
  const ProductCodebook pc = synthetic_codebook(config, options.seed);
  // The wide grid's first half is the base grid, so both see the same pixels.
  const LatentGrid wide = synthetic_latents(options.h, options.w * 2, config.d, options.seed);
  LatentGrid base(options.h, options.w, config.d);
  for (std::size_t r = 0; r < options.h; ++r) {
    const auto* src = wide.data.data() + r * options.w * 2 * config.d;
    std::copy(src, src + options.w * config.d, base.data.data() + r * options.w * config.d);
  }
  // Alternating the two grids rep by rep keeps clock and cache drift from
  // landing on one side of the ratio.
  std::vector<double> narrow_ms, wide_ms;
  for (std::size_t i = 0; i < options.warmup + options.reps; ++i) {
    const double a = encode_samples(base, pc, 0, 1, 1).front();
    const double b = encode_samples(wide, pc, 0, 1, 1).front();
    if (i < options.warmup) continue;
    narrow_ms.push_back(a);
    wide_ms.push_back(b);
  }
  return median(wide_ms) / median(narrow_ms);
}

BenchPlan parse_bench_plan(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidInput,
         "bench configs: JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    require(root.is_object() && root.contains("configs") && root.at("configs").is_array() &&
                !root.at("configs").empty(),
            ErrorCode::kInvalidInput, "bench configs: need a non-empty 'configs' array");
    for (const auto& [key, _] : root.items()) {
      static const std::vector<std::string> allowed{"configs", "h",    "w",
                                                    "warmup",  "reps", "seed",
                                                    "parallel_workers"};
      require(std::find(allowed.begin(), allowed.end(), key) != allowed.end(),
              ErrorCode::kInvalidInput, "bench configs: unknown key '" + key + "'");
    }
    BenchPlan plan;
    for (const auto& c : root.at("configs")) {
      BenchConfig cfg{c.at("d").get<std::size_t>(), c.at("S").get<std::size_t>(),
                      c.at("K").get<std::size_t>()};
      PQConfig(cfg.d, cfg.subspaces, cfg.codebook_size);  // validates
      plan.configs.push_back(cfg);
    }
    plan.options.h = root.value("h", plan.options.h);
    plan.options.w = root.value("w", plan.options.w);
    plan.options.warmup = root.value("warmup", plan.options.warmup);
    plan.options.reps = root.value("reps", plan.options.reps);
    plan.options.seed = root.value("seed", plan.options.seed);
    plan.options.parallel_workers = root.value("parallel_workers", plan.options.parallel_workers);
    plan.options.validate();
    return plan;
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("bench configs: ") + e.what());
  }
}

}  // namespace pqcodec::bench
