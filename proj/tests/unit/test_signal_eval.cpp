#include <gtest/gtest.h>

#include <json.hpp>

#include "gvps/error.hpp"
#include "gvps/progress.hpp"
#include "gvps/random.hpp"
#include "gvps/signal_eval.hpp"

using namespace gvps;

namespace {

struct Counts {
  int tp = 0, fp = 0, fn = 0;
  double p() const { return tp + fp ? double(tp) / (tp + fp) : 0.0; }
  double r() const { return tp + fn ? double(tp) / (tp + fn) : 0.0; }
  double f1() const { return p() + r() > 0 ? 2 * p() * r() / (p() + r()) : 0.0; }
};

}  // namespace

TEST(SignalEval, MatchesCountingOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = uniform_int(rng, 1, 60);
    std::vector<double> deltas(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      labels[i] = uniform01(rng) < 0.5 ? 1 : -1;
      deltas[i] = (uniform01(rng) - 0.5) * 0.1;
      if (uniform01(rng) < 0.1) deltas[i] = 0.0;
    }
    const double band = trial % 2 ? 0.01 : 0.0;
    Counts pos, neg;
    int abstained = 0;
    for (int i = 0; i < n; ++i) {
      const int pred = deltas[i] > band ? 1 : deltas[i] < -band ? -1 : 0;
      if (pred == 0) {
        ++abstained;
        continue;
      }
      Counts& hit = pred == 1 ? pos : neg;
      Counts& other = pred == 1 ? neg : pos;
      if (pred == labels[i]) {
        ++hit.tp;
      } else {
        ++hit.fp;
        ++other.fn;
      }
    }
    const auto r = report_from_deltas(deltas, labels, band);
    EXPECT_EQ(r.abstained, abstained);
    EXPECT_EQ(r.total, n);
    EXPECT_DOUBLE_EQ(r.positive.precision, pos.p());
    EXPECT_DOUBLE_EQ(r.positive.recall, pos.r());
    EXPECT_DOUBLE_EQ(r.positive.f1, pos.f1());
    EXPECT_DOUBLE_EQ(r.negative.precision, neg.p());
    EXPECT_DOUBLE_EQ(r.negative.recall, neg.r());
    EXPECT_DOUBLE_EQ(r.negative.f1, neg.f1());
  }
}

TEST(SignalEval, PerfectSeparation) {
  const auto r = report_from_deltas(std::vector<double>{0.3, -0.2, 0.1, -0.4}, std::vector<int>{1, -1, 1, -1}, 0.0);
  EXPECT_EQ(r.positive.f1, 1.0);
  EXPECT_EQ(r.negative.f1, 1.0);
  EXPECT_EQ(r.positive.support, 2);
}

TEST(SignalEval, AllAbstainedGivesZeros) {
  const auto r = report_from_deltas(std::vector<double>{0.0, 0.0}, std::vector<int>{1, -1}, 0.0);
  EXPECT_EQ(r.abstained, 2);
  EXPECT_EQ(r.positive.f1, 0.0);
  EXPECT_EQ(r.negative.precision, 0.0);
}

TEST(SignalEval, RejectsMismatchedInputs) {
  EXPECT_THROW(report_from_deltas(std::vector<double>{0.1}, std::vector<int>{1, 1}, 0.0), InputError);
  EXPECT_THROW(report_from_deltas(std::vector<double>{0.1}, std::vector<int>{2}, 0.0), InputError);
  const PolicyParams p(PolicyShape{19, 2, 2, 2, {}});
  EXPECT_THROW(score_corpus(p, LabeledCorpus{}), InputError);
}

TEST(SignalEval, CorpusDeltasUseGoldPrefixes) {
  PolicyShape s;
  s.vocab_size = 19;
  s.embed_dim = 3;
  s.hidden_dim = 4;
  s.window = 6;
  const auto p = PolicyParams::random(s, 5, 1.0);
  const auto corpus = generate_labeled_corpus(4, 0.5, 9);
  const PolicyEvaluator eval(p);
  const auto deltas = corpus_deltas(eval, corpus);
  ASSERT_EQ(deltas.size(), corpus.steps.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& st = corpus.steps[i];
    const auto& pr = corpus.problems[st.problem_index];
    TokenSeq after = st.prefix_ids;
    after.insert(after.end(), st.step_ids.begin(), st.step_ids.end());
    const double expected = probe_confidence(eval, pr.prompt_ids, after, pr.gold_answer_ids) -
                            probe_confidence(eval, pr.prompt_ids, st.prefix_ids, pr.gold_answer_ids);
    EXPECT_NEAR(deltas[i], expected, 1e-15);
  }
  const auto report = nlohmann::json::parse(to_json(score_corpus(p, corpus)));
  EXPECT_TRUE(report.contains("positive"));
  EXPECT_TRUE(report.contains("negative"));
  EXPECT_EQ(report["total"].get<int>(), static_cast<int>(corpus.steps.size()));
}
