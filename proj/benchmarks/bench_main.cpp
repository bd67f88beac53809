#include <benchmark/benchmark.h>

#include "gvps/policy.hpp"
#include "gvps/progress.hpp"
#include "gvps/segmentation.hpp"
#include "gvps/tasks.hpp"
#include "gvps/trainer.hpp"

namespace {

using namespace gvps;

PolicyParams bench_policy(int hidden, int window) {
  const Vocab& v = Vocab::arithmetic();
  return PolicyParams::random(PolicyShape{v.size(), 16, hidden, window, v.special()}, 42, 0.3);
}

void BM_Forward(benchmark::State& state) {
  const auto params = bench_policy(static_cast<int>(state.range(0)), 12);
  const PolicyEvaluator eval(params);
  const Problem p = generate_problem(TaskKind::chain_add, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(eval.forward(p.prompt_ids));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(256);

void BM_SampleRollout(benchmark::State& state) {
  const auto params = bench_policy(128, 12);
  const PolicyEvaluator eval(params);
  const Problem p = generate_problem(TaskKind::chain_add, 3, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_trajectory(eval, p.prompt_ids, 1.0, 64, ++seed));
}
BENCHMARK(BM_SampleRollout);

void BM_EvaluatorBuild(benchmark::State& state) {
  const auto params = bench_policy(128, 12);
  for (auto _ : state) {
    PolicyEvaluator eval(params);
    benchmark::DoNotOptimize(eval.slot_table().data());
  }
}
BENCHMARK(BM_EvaluatorBuild);

void BM_ProgressProbes(benchmark::State& state) {
  const auto params = bench_policy(128, 12);
  const PolicyEvaluator eval(params);
  const Problem p = generate_problem(TaskKind::chain_add, 3, 1);
  Trajectory t = sample_trajectory(eval, p.prompt_ids, 1.0, 32, 3);
  const auto seg = partition_fixed(t, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_progress(eval, seg, p.gold_answer_ids));
}
BENCHMARK(BM_ProgressProbes)->Arg(1)->Arg(6);

void BM_Gradient(benchmark::State& state) {
  const auto params = bench_policy(128, 12);
  const Problem p = generate_problem(TaskKind::chain_add, 3, 1);
  Trajectory t = sample_trajectory(params, p.prompt_ids, 1.0, 32, 3);
  const std::vector<double> coeffs(t.response_ids.size(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_logprob_gradient(params, t, coeffs));
}
BENCHMARK(BM_Gradient);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig c;
  c.total_steps = 1;
  c.eval_problems = 1;
  c.method = state.range(0) ? TrainMethod::vps : TrainMethod::grpo;
  TrainOptions o;
  o.initial_params = bench_policy(c.hidden_dim, c.window);
  for (auto _ : state) benchmark::DoNotOptimize(train(c, o).params.size());
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
