#include "gvps/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "gvps/checkpoint.hpp"
#include "gvps/config.hpp"
#include "gvps/error.hpp"
#include "gvps/progress.hpp"
#include "gvps/random.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "trainer";

constexpr std::uint64_t kProblemTag = 0x9b01;
constexpr std::uint64_t kRolloutTag = 0x9b02;
constexpr std::uint64_t kSftProblemTag = 0x5f01;
constexpr std::uint64_t kSftShapeTag = 0x5f02;
constexpr std::uint64_t kEvalProblemTag = 0xe701;
constexpr std::uint64_t kEvalRolloutTag = 0xe702;

using Clock = std::chrono::steady_clock;

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index writes only
// its own output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

Problem training_problem(const TrainConfig& c, int step, int index) {
  return generate_problem(c.task, c.difficulty,
                          derive_seed({c.seed, kProblemTag, static_cast<std::uint64_t>(step),
                                       static_cast<std::uint64_t>(index)}));
}

std::uint64_t rollout_seed(const TrainConfig& c, int step, int index, int member) {
  return derive_seed({c.seed, kRolloutTag, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(index),
                      static_cast<std::uint64_t>(member)});
}

struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;

  void ascend(std::span<double> theta, std::span<const double> grad, double lr) {
    if (m.empty()) {
      m.assign(theta.size(), 0.0);
      v.assign(theta.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      theta[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

struct StepStats {
  std::int64_t rollouts = 0;
  std::int64_t correct = 0;
  std::int64_t tokens = 0;
  double entropy_sum = 0.0;
  double abs_delta_sum = 0.0;
  std::int64_t delta_count = 0;
  std::int64_t probe_forwards = 0;

  void add(const GroupBatch& g, std::size_t answer_len) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      ++rollouts;
      correct += g.rewards[i];
      tokens += g.rollouts[i].length();
      for (double e : g.rollouts[i].entropies) entropy_sum += e;
      for (double d : g.progress[i].deltas) {
        abs_delta_sum += std::abs(d);
        ++delta_count;
      }
      probe_forwards += static_cast<std::int64_t>(g.progress[i].c_values.size() * answer_len);
    }
  }
};

}  // namespace

std::string_view to_string(TrainMethod method) { return method == TrainMethod::vps ? "vps" : "grpo"; }

std::string_view to_string(Optimizer optimizer) { return optimizer == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw InputError(kModule, "unknown optimizer '" + std::string(name) + "'");
}

TrainMethod parse_train_method(std::string_view name) {
  if (name == "vps") return TrainMethod::vps;
  if (name == "grpo") return TrainMethod::grpo;
  throw InputError("harness", "unknown method '" + std::string(name) + "' (expected vps or grpo)");
}

PolicyShape policy_shape(const TrainConfig& config) {
  PolicyShape s;
  s.vocab_size = Vocab::arithmetic().size();
  s.embed_dim = config.embed_dim;
  s.hidden_dim = config.hidden_dim;
  s.window = config.window;
  s.special = Vocab::arithmetic().special();
  return s;
}

std::string to_json_line(const TrainMetrics& m, bool include_wall_ms) {
  nlohmann::ordered_json j = {{"step", m.step},
                              {"mean_reward", m.mean_reward},
                              {"train_accuracy", m.train_accuracy},
                              {"mean_response_len", m.mean_response_len},
                              {"grad_norm", m.grad_norm},
                              {"mean_entropy", m.mean_entropy},
                              {"mean_abs_delta_c", m.mean_abs_delta_c},
                              {"probe_forwards", m.probe_forwards}};
  if (include_wall_ms) j["wall_ms"] = m.wall_ms;
  return j.dump();
}

TrainMetrics metrics_from_json_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrainMetrics m;
    m.step = j.at("step").get<int>();
    m.mean_reward = j.at("mean_reward").get<double>();
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.mean_response_len = j.at("mean_response_len").get<double>();
    m.grad_norm = j.at("grad_norm").get<double>();
    m.mean_entropy = j.at("mean_entropy").get<double>();
    m.mean_abs_delta_c = j.at("mean_abs_delta_c").get<double>();
    m.probe_forwards = j.value("probe_forwards", std::int64_t{0});
    m.wall_ms = j.value("wall_ms", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("harness", std::string("malformed metrics line: ") + e.what());
  }
}

std::string to_json_line(const RolloutDump& d) {
  nlohmann::ordered_json j = {{"step", d.step},
                              {"problem_id", d.problem_id},
                              {"prompt", d.prompt},
                              {"tokens", d.tokens},
                              {"reward", d.reward},
                              {"boundaries", d.boundaries},
                              {"c_values", d.c_values},
                              {"deltas", d.deltas},
                              {"per_token_advantages", d.per_token_advantages}};
  return j.dump();
}

SegmentedTrajectory segment_reasoning(const Trajectory& rollout, const TrainConfig& config) {
  const auto delim = last_answer_delim(rollout.response_ids);
  const Trajectory reasoning = truncate(rollout, delim ? static_cast<int>(*delim) : rollout.length());
  if (reasoning.length() == 0) throw InputError("segmentation", "rollout has no reasoning tokens");
  if (config.segmentation == SegmentStrategy::adaptive_entropy) {
    return partition_adaptive(reasoning, find_cutpoints(reasoning, config.percentile_p), config.n_per_segment);
  }
  return partition_fixed(reasoning, config.fixed_segments);
}

GroupBatch build_group(const PolicyEvaluator& evaluator, const TrainConfig& config, const Problem& problem,
                       std::vector<Trajectory> rollouts) {
  GroupBatch g;
  g.prompt_ref = problem.id;
  g.alpha = config.alpha;
  g.rollouts = std::move(rollouts);
  for (const auto& r : g.rollouts) g.rewards.push_back(verify(problem, r.response_ids));
  g.outcome_advantages = outcome_advantages(g.rewards, config.std_normalize);

  // alpha = 0 makes every progress term vanish, so the probes are skipped.
  const bool use_progress = config.method == TrainMethod::vps && config.alpha != 0.0;
  for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
    const Trajectory& r = g.rollouts[i];
    const double A = g.outcome_advantages[i];
    const int T = r.length();
    const auto delim = last_answer_delim(r.response_ids);
    const int reasoning_len = delim ? static_cast<int>(*delim) : T;

    SegmentedTrajectory seg;
    ProgressTrace trace;
    std::vector<double> coeffs;
    if (use_progress && reasoning_len > 0) {
      seg = segment_reasoning(r, config);
      trace = compute_progress(evaluator, seg, problem.gold_answer_ids);
      coeffs = hybrid_advantages(A, trace.deltas, config.alpha, seg, TokenRange{reasoning_len + 1, T + 1});
    } else {
      seg.trajectory = truncate(r, reasoning_len);
      seg.boundaries = {1};
      seg.M = 0;
      coeffs.assign(static_cast<std::size_t>(T), A);
    }
    g.segments.push_back(std::move(seg));
    g.progress.push_back(std::move(trace));
    g.per_token_advantages.push_back(std::move(coeffs));
  }
  return g;
}

PolicyParams warm_start(const TrainConfig& config) {
  validate(config);
  PolicyParams params = PolicyParams::random(policy_shape(config), config.sft_seed, config.init_scale);
  const TokenId delim = Vocab::arithmetic().answer_delim();
  Adam adam;
  const double weight = 1.0 / config.sft_batch;
  std::vector<double> coeffs;
  for (int step = 1; step <= config.sft_steps; ++step) {
    PolicyEvaluator eval(params);
    GradientAccumulator acc(eval);
    for (int i = 0; i < config.sft_batch; ++i) {
      const auto s = static_cast<std::uint64_t>(step);
      const auto k = static_cast<std::uint64_t>(i);
      const Problem p =
          generate_problem(config.task, config.difficulty, derive_seed({config.sft_seed, kSftProblemTag, s, k}));
      Rng rng(derive_seed({config.sft_seed, kSftShapeTag, s, k}));
      std::size_t kept = p.gold_steps.size();
      if (uniform01(rng) < config.sft_early_exit_rate) {
        kept = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p.gold_steps.size()) - 1));
      }
      TokenSeq response;
      for (std::size_t j = 0; j < kept; ++j) {
        response.insert(response.end(), p.gold_steps[j].begin(), p.gold_steps[j].end());
      }
      response.push_back(delim);
      response.insert(response.end(), p.gold_answer_ids.begin(), p.gold_answer_ids.end());
      coeffs.assign(response.size(), weight);
      acc.add_sequence(p.prompt_ids, response, coeffs);
    }
    const auto grad = acc.finish();
    adam.ascend(params.theta(), grad, config.sft_lr);
    if (!params.all_finite()) throw StateError(kModule, "warm start diverged at step " + std::to_string(step));
  }
  return params;
}

EvalResult evaluate(const PolicyParams& params, const TrainConfig& config, int n_problems, std::uint64_t seed) {
  if (n_problems < 1) throw InputError(kModule, "evaluation needs at least one problem");
  PolicyEvaluator eval(params);
  std::vector<int> correct(static_cast<std::size_t>(n_problems));
  std::vector<int> lengths(static_cast<std::size_t>(n_problems));
  parallel_for(n_problems, config.threads, [&](int i) {
    const auto k = static_cast<std::uint64_t>(i);
    const Problem p = generate_problem(config.task, config.difficulty, derive_seed({seed, kEvalProblemTag, k}));
    const Trajectory t = sample_trajectory(eval, p.prompt_ids, config.temperature, config.max_response_length,
                                           derive_seed({seed, kEvalRolloutTag, k}));
    correct[static_cast<std::size_t>(i)] = verify(p, t.response_ids);
    lengths[static_cast<std::size_t>(i)] = t.length();
  });
  EvalResult r;
  r.accuracy = std::accumulate(correct.begin(), correct.end(), 0.0) / n_problems;
  r.mean_response_len = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n_problems;
  return r;
}

int steps_to_threshold(std::span<const TrainMetrics> metrics, double threshold, int window) {
  if (window < 1) throw InputError(kModule, "threshold window must be positive");
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t i = w - 1; i < metrics.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = i + 1 - w; k <= i; ++k) sum += metrics[k].train_accuracy;
    if (sum / static_cast<double>(window) >= threshold) return metrics[i].step;
  }
  return static_cast<int>(metrics.size()) + 1;
}

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  validate(config);
  TrainResult result;
  result.params = options.initial_params ? *options.initial_params : warm_start(config);
  PolicyParams& params = result.params;
  if (!(params.shape() == policy_shape(config))) {
    throw InputError(kModule, "initial parameters do not match the configured policy shape");
  }
  const std::string config_text = to_config_text(config);
  const auto save = [&] {
    if (!options.checkpoint_out.empty()) save_checkpoint(options.checkpoint_out, params, config_text);
  };

  const int B = config.batch_size;
  const int G = config.group_size;
  std::vector<double> velocity;
  Adam adam;

  for (int step = 1; step <= config.total_steps; ++step) {
    const auto t0 = Clock::now();
    const PolicyEvaluator eval(params);

    std::vector<Problem> problems(static_cast<std::size_t>(B));
    std::vector<GroupBatch> groups(static_cast<std::size_t>(B));
    parallel_for(B, config.threads, [&](int b) {
      auto& problem = problems[static_cast<std::size_t>(b)];
      problem = training_problem(config, step, b);
      std::vector<Trajectory> rollouts;
      rollouts.reserve(static_cast<std::size_t>(G));
      for (int i = 0; i < G; ++i) {
        rollouts.push_back(sample_trajectory(eval, problem.prompt_ids, config.temperature,
                                             config.max_response_length, rollout_seed(config, step, b, i)));
      }
      groups[static_cast<std::size_t>(b)] = build_group(eval, config, problem, std::move(rollouts));
    });

    StepStats stats;
    for (int b = 0; b < B; ++b) {
      stats.add(groups[static_cast<std::size_t>(b)], problems[static_cast<std::size_t>(b)].gold_answer_ids.size());
    }

    // Gradient of (1 / (G * batch)) * sum_i sum_t coeff_t * log pi(o_t), ascended.
    const auto apply = [&](std::vector<double> grad) {
      std::span<const double> direction = grad;
      if (config.momentum > 0.0) {
        if (velocity.empty()) velocity.assign(grad.size(), 0.0);
        for (std::size_t k = 0; k < grad.size(); ++k) velocity[k] = config.momentum * velocity[k] + grad[k];
        direction = velocity;
      }
      if (!all_finite(direction)) {
        throw StateError(kModule, "non-finite gradient at step " + std::to_string(step));
      }
      auto theta = params.theta();
      if (config.optimizer == Optimizer::adam) {
        adam.ascend(theta, direction, config.learning_rate);
      } else {
        for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += config.learning_rate * direction[k];
      }
      if (!params.all_finite()) throw StateError(kModule, "non-finite parameters after step " + std::to_string(step));
      return l2_norm(direction);
    };

    double grad_norm = 0.0;
    std::vector<double> scaled;
    if (config.objective == ObjectiveMode::reinforce) {
      GradientAccumulator acc(eval);
      const double scale = 1.0 / (static_cast<double>(G) * B);
      for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const auto& coeffs = g.per_token_advantages[i];
          scaled.resize(coeffs.size());
          for (std::size_t t = 0; t < coeffs.size(); ++t) scaled[t] = coeffs[t] * scale;
          acc.add_trajectory(g.rollouts[i], scaled);
        }
      }
      grad_norm = apply(acc.finish());
    } else {
      std::vector<std::vector<std::vector<double>>> old_logprobs(groups.size());
      for (std::size_t b = 0; b < groups.size(); ++b) {
        for (const auto& r : groups[b].rollouts) {
          old_logprobs[b].push_back(eval.token_logprobs(r.prompt_ids, r.response_ids));
        }
      }
      const int mb = config.mini_batch_size;
      const double scale = 1.0 / (static_cast<double>(G) * mb);
      int updates = 0;
      for (int epoch = 0; epoch < config.clip_epochs; ++epoch) {
        for (int start = 0; start < B; start += mb) {
          const PolicyEvaluator current(params);
          GradientAccumulator acc(current);
          for (int b = start; b < start + mb; ++b) {
            const auto& g = groups[static_cast<std::size_t>(b)];
            std::vector<std::vector<double>> cur;
            for (const auto& r : g.rollouts) cur.push_back(current.token_logprobs(r.prompt_ids, r.response_ids));
            const auto obj = policy_objective_coeffs(g, ObjectiveMode::clipped, config.eps_low, config.eps_high,
                                                     &old_logprobs[static_cast<std::size_t>(b)], &cur);
            for (std::size_t i = 0; i < g.size(); ++i) {
              const auto& coeffs = obj.gradient_coeffs[i];
              scaled.resize(coeffs.size());
              for (std::size_t t = 0; t < coeffs.size(); ++t) scaled[t] = coeffs[t] * scale;
              acc.add_trajectory(g.rollouts[i], scaled);
            }
          }
          grad_norm += apply(acc.finish());
          ++updates;
        }
      }
      grad_norm /= std::max(updates, 1);
    }

    TrainMetrics m;
    m.step = step;
    m.mean_reward = static_cast<double>(stats.correct) / static_cast<double>(stats.rollouts);
    m.train_accuracy = m.mean_reward;
    m.mean_response_len = static_cast<double>(stats.tokens) / static_cast<double>(stats.rollouts);
    m.grad_norm = grad_norm;
    m.mean_entropy = stats.tokens > 0 ? stats.entropy_sum / static_cast<double>(stats.tokens) : 0.0;
    m.mean_abs_delta_c = stats.delta_count > 0 ? stats.abs_delta_sum / static_cast<double>(stats.delta_count) : 0.0;
    m.probe_forwards = stats.probe_forwards;
    m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.metrics.push_back(m);
    if (options.on_metrics) options.on_metrics(m);

    if (options.on_dump && config.dump_every > 0 && step % config.dump_every == 0) {
      const auto& g = groups.front();
      const Vocab& vocab = Vocab::arithmetic();
      for (std::size_t i = 0; i < g.size(); ++i) {
        RolloutDump d;
        d.step = step;
        d.problem_id = problems.front().id;
        d.prompt = vocab.decode(g.rollouts[i].prompt_ids);
        d.tokens = vocab.decode(g.rollouts[i].response_ids);
        d.reward = g.rewards[i];
        d.boundaries = g.segments[i].boundaries;
        d.c_values = g.progress[i].c_values;
        d.deltas = g.progress[i].deltas;
        d.per_token_advantages = g.per_token_advantages[i];
        options.on_dump(d);
      }
    }
    if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) save();
  }
  save();
  result.final_eval = evaluate(params, config, config.eval_problems, derive_seed({config.seed, kEvalProblemTag}));
  return result;
}

}  // namespace gvps
