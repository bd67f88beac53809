#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gvps/checkpoint.hpp"
#include "gvps/config.hpp"
#include "gvps/error.hpp"
#include "gvps/trainer.hpp"
#include "tiny_config.hpp"

using namespace gvps;

namespace {

std::vector<std::string> metric_lines(const TrainConfig& c, const TrainOptions& base = {}) {
  std::vector<std::string> lines;
  TrainOptions o = base;
  o.on_metrics = [&](const TrainMetrics& m) { lines.push_back(to_json_line(m, false)); };
  train(c, o);
  return lines;
}

}  // namespace

TEST(Trainer, ZeroLearningRateLeavesParamsUnchanged) {
  auto c = tiny_config();
  c.learning_rate = 0.0;
  const PolicyParams init = warm_start(c);
  TrainOptions o;
  o.initial_params = init;
  const auto r = train(c, o);
  EXPECT_EQ(r.params, init);
  EXPECT_EQ(r.metrics.size(), 3u);
}

TEST(Trainer, AlphaZeroMatchesPlainGroupPath) {
  auto a = tiny_config();
  a.alpha = 0.0;
  a.total_steps = 4;
  auto b = a;
  b.method = TrainMethod::grpo;
  const auto ra = train(a);
  const auto rb = train(b);
  EXPECT_EQ(ra.params, rb.params);
  ASSERT_EQ(ra.metrics.size(), rb.metrics.size());
  for (std::size_t i = 0; i < ra.metrics.size(); ++i) {
    EXPECT_EQ(to_json_line(ra.metrics[i], false), to_json_line(rb.metrics[i], false));
  }
}

TEST(Trainer, ProgressChangesTheUpdate) {
  auto a = tiny_config();
  auto b = a;
  b.alpha = 0.0;
  EXPECT_NE(train(a).params, train(b).params);
}

TEST(Trainer, ReproducibleRunsGiveIdenticalMetrics) {
  auto c = tiny_config();
  EXPECT_EQ(metric_lines(c), metric_lines(c));
  auto threaded = c;
  threaded.threads = 3;
  EXPECT_EQ(metric_lines(c), metric_lines(threaded));
  auto other = c;
  other.seed = 2;
  EXPECT_NE(metric_lines(c), metric_lines(other));
}

TEST(Trainer, MetricsAreWellFormed) {
  auto c = tiny_config();
  const auto r = train(c);
  for (const auto& m : r.metrics) {
    EXPECT_GE(m.train_accuracy, 0.0);
    EXPECT_LE(m.train_accuracy, 1.0);
    EXPECT_EQ(m.train_accuracy, m.mean_reward);
    // fraction with denominator G * batch
    EXPECT_EQ(std::round(m.mean_reward * 16) / 16, m.mean_reward);
    EXPECT_TRUE(std::isfinite(m.grad_norm));
    EXPECT_GE(m.mean_entropy, 0.0);
    EXPECT_GT(m.probe_forwards, 0);
  }
  const auto line = to_json_line(r.metrics[0], false);
  EXPECT_EQ(line.find("wall_ms"), std::string::npos);
  EXPECT_NE(to_json_line(r.metrics[0], true).find("wall_ms"), std::string::npos);
  EXPECT_EQ(to_json_line(metrics_from_json_line(line), false), line);
}

TEST(Trainer, GroupPathSpendsNoProbes) {
  auto c = tiny_config();
  c.method = TrainMethod::grpo;
  for (const auto& m : train(c).metrics) {
    EXPECT_EQ(m.probe_forwards, 0);
    EXPECT_EQ(m.mean_abs_delta_c, 0.0);
  }
}

TEST(Trainer, ClippedModeAtOneEpochMatchesReinforce) {
  // With a single mini-batch and one epoch the ratio is 1 everywhere.
  auto a = tiny_config();
  auto b = a;
  b.objective = ObjectiveMode::clipped;
  const auto ra = train(a);
  const auto rb = train(b);
  ASSERT_EQ(ra.params.size(), rb.params.size());
  for (std::size_t k = 0; k < ra.params.size(); ++k) EXPECT_NEAR(ra.params.theta()[k], rb.params.theta()[k], 1e-12);
}

TEST(Trainer, ClippedModeWithMiniBatchesRuns) {
  auto c = tiny_config();
  c.objective = ObjectiveMode::clipped;
  c.mini_batch_size = 2;
  c.clip_epochs = 2;
  const auto r = train(c);
  EXPECT_TRUE(r.params.all_finite());
}

TEST(Trainer, BuildGroupSegmentsOnlyTheReasoning) {
  auto c = tiny_config();
  const auto params = warm_start(c);
  const PolicyEvaluator eval(params);
  const Problem p = generate_problem(c.task, c.difficulty, 5);
  Trajectory gold;
  gold.prompt_ids = p.prompt_ids;
  gold.response_ids = p.gold_response();
  gold.step_logprobs = eval.token_logprobs(p.prompt_ids, gold.response_ids);
  for (std::size_t i = 0; i < gold.response_ids.size(); ++i) gold.entropies.push_back(0.1 * double(i % 3));
  Trajectory bare = gold;  // answer only
  const auto delim = *last_answer_delim(gold.response_ids);
  bare.response_ids.erase(bare.response_ids.begin(), bare.response_ids.begin() + delim);
  bare.step_logprobs.erase(bare.step_logprobs.begin(), bare.step_logprobs.begin() + delim);
  bare.entropies.erase(bare.entropies.begin(), bare.entropies.begin() + delim);
  const auto g = build_group(eval, c, p, {gold, bare});
  EXPECT_EQ(g.rewards, (std::vector<int>{1, 1}));
  EXPECT_EQ(g.segments[0].length(), static_cast<int>(delim));
  EXPECT_EQ(g.segments[0].boundaries.back(), static_cast<int>(delim) + 1);
  EXPECT_EQ(g.segments[1].M, 0);
  EXPECT_EQ(g.per_token_advantages[0].size(), gold.response_ids.size());
  for (std::size_t t = delim; t < gold.response_ids.size(); ++t) EXPECT_EQ(g.per_token_advantages[0][t], 0.0);
  for (double x : g.per_token_advantages[1]) EXPECT_EQ(x, 0.0);
}

TEST(Trainer, StepsToThreshold) {
  std::vector<TrainMetrics> m(8);
  const double acc[] = {0.2, 0.95, 0.95, 0.5, 0.9, 1.0, 1.0, 0.9};
  for (int i = 0; i < 8; ++i) {
    m[i].step = i + 1;
    m[i].train_accuracy = acc[i];
  }
  EXPECT_EQ(steps_to_threshold(m, 0.9, 1), 2);
  EXPECT_EQ(steps_to_threshold(m, 0.9, 3), 7);  // first trailing window of 3 with mean >= 0.9
  EXPECT_EQ(steps_to_threshold(m, 0.99, 2), 7);
  EXPECT_EQ(steps_to_threshold(m, 0.999, 3), 9);
}

TEST(Trainer, WritesLoadableCheckpoint) {
  auto c = tiny_config();
  const auto path = std::filesystem::temp_directory_path() / "gvps_trainer_test.ckpt";
  TrainOptions o;
  o.checkpoint_out = path;
  const auto r = train(c, o);
  const auto ck = load_checkpoint(path);
  EXPECT_EQ(ck.params, r.params);
  EXPECT_EQ(parse_config(ck.embedded_config), c);
  std::filesystem::remove(path);
}

TEST(Trainer, WarmStartImprovesGoldLikelihood) {
  auto c = tiny_config();
  c.sft_steps = 0;
  const auto before = warm_start(c);
  c.sft_steps = 60;
  const auto after = warm_start(c);
  const Problem p = generate_problem(c.task, c.difficulty, 1234);
  EXPECT_GT(sequence_logprob(after, p.prompt_ids, p.gold_response()),
            sequence_logprob(before, p.prompt_ids, p.gold_response()));
}

TEST(Trainer, RejectsMismatchedInitialParams) {
  auto c = tiny_config();
  TrainOptions o;
  PolicyShape s = policy_shape(c);
  s.hidden_dim += 1;
  o.initial_params = PolicyParams(s);
  EXPECT_THROW(train(c, o), InputError);
}

TEST(Trainer, DumpsRollouts) {
  auto c = tiny_config();
  c.dump_every = 2;
  int dumps = 0;
  TrainOptions o;
  o.on_dump = [&](const RolloutDump& d) {
    ++dumps;
    EXPECT_EQ(d.step, 2);
    EXPECT_EQ(d.per_token_advantages.size(), d.tokens.size());
    EXPECT_NE(to_json_line(d).find("per_token_advantages"), std::string::npos);
  };
  train(c, o);
  EXPECT_EQ(dumps, c.group_size);
}
