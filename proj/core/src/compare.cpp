#include "gvps/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "gvps/config.hpp"
#include "gvps/error.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "harness";

std::string warm_start_key(const TrainConfig& c) {
  TrainConfig k;
  k.task = c.task;
  k.difficulty = c.difficulty;
  k.embed_dim = c.embed_dim;
  k.hidden_dim = c.hidden_dim;
  k.window = c.window;
  k.init_scale = c.init_scale;
  k.sft_steps = c.sft_steps;
  k.sft_batch = c.sft_batch;
  k.sft_lr = c.sft_lr;
  k.sft_early_exit_rate = c.sft_early_exit_rate;
  k.sft_seed = c.sft_seed;
  return to_config_text(k);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TrainResult run_one(const TrainConfig& config, WarmStartCache& cache, const std::filesystem::path& metrics_file) {
  std::ofstream out;
  TrainOptions options;
  options.initial_params = cache.get(config);
  if (!metrics_file.empty()) {
    out.open(metrics_file, std::ios::trunc);
    if (!out) throw InputError(kModule, "cannot write " + metrics_file.string());
    options.on_metrics = [&](const TrainMetrics& m) { out << to_json_line(m, !config.reproducible) << '\n'; };
  }
  return train(config, options);
}

std::string summary_header() {
  return "steps_to_threshold,final_accuracy,final_mean_length,final_train_accuracy,grad_norm_variance";
}

std::string summary_cells(const ArmSummary& s) {
  return std::to_string(s.steps_to_threshold) + "," + num(s.final_accuracy) + "," + num(s.final_mean_length) + "," +
         num(s.final_train_accuracy) + "," + num(s.grad_norm_variance);
}

}  // namespace

const PolicyParams& WarmStartCache::get(const TrainConfig& config) {
  const std::string key = warm_start_key(config);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, warm_start(config)).first;
  return it->second;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ArmSummary summarize(const TrainConfig& config, const TrainResult& result) {
  ArmSummary s;
  s.steps_to_threshold = steps_to_threshold(result.metrics, config.accuracy_threshold, config.threshold_window);
  s.final_accuracy = result.final_eval.accuracy;
  s.final_mean_length = result.final_eval.mean_response_len;
  const std::size_t n = result.metrics.size();
  const std::size_t tail = std::min<std::size_t>(n, static_cast<std::size_t>(config.threshold_window));
  double acc = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) acc += result.metrics[i].train_accuracy;
  s.final_train_accuracy = tail ? acc / static_cast<double>(tail) : 0.0;
  if (n > 1) {
    double mean = 0.0;
    for (const auto& m : result.metrics) mean += m.grad_norm;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& m : result.metrics) var += (m.grad_norm - mean) * (m.grad_norm - mean);
    s.grad_norm_variance = var / static_cast<double>(n - 1);
  }
  return s;
}

#define GVPS_MEDIAN_OF(field, arm)                                     \
  std::vector<double> v;                                              \
  for (const auto& r : rows) v.push_back(static_cast<double>(r.arm.field)); \
  return median(v)

double PairedSummary::median_steps_a() const { GVPS_MEDIAN_OF(steps_to_threshold, a); }
double PairedSummary::median_steps_b() const { GVPS_MEDIAN_OF(steps_to_threshold, b); }
double PairedSummary::median_final_accuracy_a() const { GVPS_MEDIAN_OF(final_accuracy, a); }
double PairedSummary::median_final_accuracy_b() const { GVPS_MEDIAN_OF(final_accuracy, b); }
#undef GVPS_MEDIAN_OF

double PairedSummary::mean_final_length_a() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.a.final_mean_length;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}
double PairedSummary::mean_final_length_b() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.b.final_mean_length;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

PairedSummary compare(const TrainConfig& config_a, const TrainConfig& config_b, int n_seeds,
                      const std::filesystem::path& metrics_out, WarmStartCache* cache) {
  if (n_seeds < 3) throw InputError(kModule, "compare needs at least 3 seeds");
  WarmStartCache local;
  WarmStartCache& ws = cache ? *cache : local;
  if (!metrics_out.empty()) std::filesystem::create_directories(metrics_out);
  PairedSummary summary;
  for (int k = 0; k < n_seeds; ++k) {
    TrainConfig a = config_a;
    TrainConfig b = config_b;
    a.seed = config_a.seed + static_cast<std::uint64_t>(k);
    b.seed = a.seed;
    const auto file = [&](const char* arm) {
      return metrics_out.empty() ? std::filesystem::path{}
                                 : metrics_out / (std::string(arm) + "_seed" + std::to_string(a.seed) + ".metrics.jsonl");
    };
    PairedRow row;
    row.seed = a.seed;
    row.a = summarize(a, run_one(a, ws, file("a")));
    row.b = summarize(b, run_one(b, ws, file("b")));
    summary.rows.push_back(row);
  }
  if (!metrics_out.empty()) {
    std::ofstream csv(metrics_out / "summary.csv", std::ios::trunc);
    const auto h = summary_header();
    std::string ha, hb;
    for (const char* arm : {"a_", "b_"}) {
      std::string prefixed;
      std::size_t start = 0;
      while (start <= h.size()) {
        const auto end = h.find(',', start);
        prefixed += (prefixed.empty() ? "" : ",") + std::string(arm) + h.substr(start, end - start);
        if (end == std::string::npos) break;
        start = end + 1;
      }
      (arm[0] == 'a' ? ha : hb) = prefixed;
    }
    csv << "seed," << ha << "," << hb << '\n';
    for (const auto& r : summary.rows) {
      csv << r.seed << "," << summary_cells(r.a) << "," << summary_cells(r.b) << '\n';
    }
  }
  return summary;
}

std::vector<SweepRow> sweep(const TrainConfig& base, const std::string& key, const std::vector<std::string>& values,
                            int n_seeds, const std::filesystem::path& metrics_out, WarmStartCache* cache) {
  if (values.empty()) throw InputError(kModule, "sweep needs at least one value");
  if (n_seeds < 1) throw InputError(kModule, "sweep needs at least one seed");
  WarmStartCache local;
  WarmStartCache& ws = cache ? *cache : local;
  if (!metrics_out.empty()) std::filesystem::create_directories(metrics_out);
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    TrainConfig c = base;
    set_config_value(c, key, value);
    validate(c);
    for (int k = 0; k < n_seeds; ++k) {
      TrainConfig run = c;
      run.seed = base.seed + static_cast<std::uint64_t>(k);
      const auto file = metrics_out.empty()
                            ? std::filesystem::path{}
                            : metrics_out / (key + "_" + value + "_seed" + std::to_string(run.seed) + ".metrics.jsonl");
      rows.push_back(SweepRow{key, value, run.seed, summarize(run, run_one(run, ws, file))});
    }
  }
  if (!metrics_out.empty()) {
    std::ofstream csv(metrics_out / "sweep.csv", std::ios::trunc);
    csv << "key,value,seed," << summary_header() << '\n';
    for (const auto& r : rows) csv << r.key << "," << r.value << "," << r.seed << "," << summary_cells(r.summary) << '\n';
  }
  return rows;
}

}  // namespace gvps
