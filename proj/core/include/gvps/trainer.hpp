#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gvps/advantage.hpp"
#include "gvps/policy.hpp"
#include "gvps/segmentation.hpp"
#include "gvps/tasks.hpp"

namespace gvps {

// vps: hybrid outcome + progress advantages. grpo: outcome advantages only;
// segmentation and probes are skipped entirely.
enum class TrainMethod { vps, grpo };

// sgd: theta += lr * (momentum-smoothed) gradient. adam: bias-corrected Adam
// ascent on the same gradient.
enum class Optimizer { sgd, adam };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view name);

std::string_view to_string(TrainMethod method);
TrainMethod parse_train_method(std::string_view name);

struct TrainConfig {
  TrainMethod method = TrainMethod::vps;
  TaskKind task = TaskKind::chain_add;
  int difficulty = 3;

  int group_size = 8;          // G
  int batch_size = 32;         // prompts per step
  int mini_batch_size = 32;    // prompts per optimizer step (clipped mode replays mini-batches)
  double learning_rate = 1.0;
  double momentum = 0.0;
  Optimizer optimizer = Optimizer::sgd;
  double temperature = 1.0;
  int max_response_length = 64;

  double alpha = 1.2;
  double percentile_p = 0.95;  // "tau" in config files
  int n_per_segment = 4;       // "n" in config files
  SegmentStrategy segmentation = SegmentStrategy::adaptive_entropy;
  int fixed_segments = 6;

  ObjectiveMode objective = ObjectiveMode::reinforce;
  double eps_low = 0.2;
  double eps_high = 0.27;
  int clip_epochs = 1;
  bool std_normalize = false;

  int total_steps = 400;       // S
  std::uint64_t seed = 1;
  bool reproducible = true;
  int threads = 1;

  // Policy architecture.
  int embed_dim = 16;
  int hidden_dim = 128;
  int window = 12;
  double init_scale = 0.02;

  // Supervised warm start that produces the base policy RL starts from.
  int sft_steps = 2500;
  int sft_batch = 32;
  double sft_lr = 0.01;
  double sft_early_exit_rate = 0.3;
  std::uint64_t sft_seed = 7;

  int eval_problems = 512;
  double accuracy_threshold = 0.9;
  int threshold_window = 5;
  int checkpoint_interval = 0;  // 0: final checkpoint only
  int dump_every = 0;           // 0: no trajectory dump

  bool operator==(const TrainConfig&) const = default;
};

// Throws InputError (module "harness") naming the first offending key.
void validate(const TrainConfig& config);

PolicyShape policy_shape(const TrainConfig& config);

struct TrainMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double train_accuracy = 0.0;
  double mean_response_len = 0.0;
  double grad_norm = 0.0;
  double mean_entropy = 0.0;
  double mean_abs_delta_c = 0.0;
  std::int64_t probe_forwards = 0;  // policy evaluations spent on probes this step
  double wall_ms = 0.0;
};

// One JSON object per line. wall_ms is written only when include_wall_ms.
std::string to_json_line(const TrainMetrics& m, bool include_wall_ms);
TrainMetrics metrics_from_json_line(const std::string& line);

struct RolloutDump {
  int step = 0;
  std::uint64_t problem_id = 0;
  std::string prompt;
  std::string tokens;
  int reward = 0;
  std::vector<int> boundaries;
  std::vector<double> c_values;
  std::vector<double> deltas;
  std::vector<double> per_token_advantages;
};

std::string to_json_line(const RolloutDump& d);

struct TrainOptions {
  std::optional<PolicyParams> initial_params;      // defaults to warm_start(config)
  std::filesystem::path checkpoint_out;            // empty: no checkpoints
  std::function<void(const TrainMetrics&)> on_metrics;
  std::function<void(const RolloutDump&)> on_dump;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_response_len = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<TrainMetrics> metrics;
  EvalResult final_eval;
};

// Base policy: Adam on the log-likelihood of gold responses. A fraction
// sft_early_exit_rate of the examples stop after a random number of steps and
// answer immediately, which teaches the policy to state its current belief
// about the answer whenever the delimiter appears.
PolicyParams warm_start(const TrainConfig& config);

// One sampled rollout per problem on a held-out stream derived from `seed`.
EvalResult evaluate(const PolicyParams& params, const TrainConfig& config, int n_problems, std::uint64_t seed);

// Runs total_steps RL steps. Throws StateError on a non-finite update; the last
// checkpoint written before that stays in place.
TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

// First step at which the trailing mean of train_accuracy over `window` steps
// reaches `threshold`; metrics.size() + 1 when it never does.
int steps_to_threshold(std::span<const TrainMetrics> metrics, double threshold, int window);

// Segments the reasoning part of `rollout` (tokens before its last answer
// delimiter) with the configured strategy. Throws when that part is empty.
SegmentedTrajectory segment_reasoning(const Trajectory& rollout, const TrainConfig& config);

// Builds the group for one prompt: rewards, outcome advantages, segmentation
// and progress of each rollout's reasoning part, and per-token advantages.
GroupBatch build_group(const PolicyEvaluator& evaluator, const TrainConfig& config, const Problem& problem,
                       std::vector<Trajectory> rollouts);

}  // namespace gvps
