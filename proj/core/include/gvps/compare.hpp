#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvps/trainer.hpp"

namespace gvps {

// Shares base policies between runs whose warm-start settings agree.
class WarmStartCache {
 public:
  const PolicyParams& get(const TrainConfig& config);
  std::size_t size() const noexcept { return cache_.size(); }

 private:
  std::map<std::string, PolicyParams> cache_;
};

struct ArmSummary {
  int steps_to_threshold = 0;     // total_steps + 1 when the threshold is never reached
  double final_accuracy = 0.0;    // held-out evaluation after the last step
  double final_mean_length = 0.0;
  double final_train_accuracy = 0.0;  // mean over the last threshold_window steps
  double grad_norm_variance = 0.0;
};

ArmSummary summarize(const TrainConfig& config, const TrainResult& result);

struct PairedRow {
  std::uint64_t seed = 0;
  ArmSummary a;
  ArmSummary b;
};

struct PairedSummary {
  std::vector<PairedRow> rows;

  double median_steps_a() const;
  double median_steps_b() const;
  double median_final_accuracy_a() const;
  double median_final_accuracy_b() const;
  double mean_final_length_a() const;
  double mean_final_length_b() const;
};

// Runs both configs for seeds base.seed + k, k < n_seeds, on identical problem
// and rollout-seed streams. When metrics_out is non-empty, per-run metrics
// JSONL and summary.csv are written there.
PairedSummary compare(const TrainConfig& config_a, const TrainConfig& config_b, int n_seeds,
                      const std::filesystem::path& metrics_out, WarmStartCache* cache = nullptr);

struct SweepRow {
  std::string key;
  std::string value;
  std::uint64_t seed = 0;
  ArmSummary summary;
};

// One run per (value, seed); `key` is any config key (alpha, n, ...).
std::vector<SweepRow> sweep(const TrainConfig& base, const std::string& key, const std::vector<std::string>& values,
                            int n_seeds, const std::filesystem::path& metrics_out, WarmStartCache* cache = nullptr);

double median(std::vector<double> values);

}  // namespace gvps
