#include "gvps/signal_eval.hpp"

#include <json.hpp>

#include "gvps/error.hpp"
#include "gvps/progress.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "signal_eval";

void finalize(ClassMetrics& m) {
  m.precision = m.predicted > 0 ? static_cast<double>(m.true_positive) / static_cast<double>(m.predicted) : 0.0;
  m.recall = m.support > 0 ? static_cast<double>(m.true_positive) / static_cast<double>(m.support) : 0.0;
  const double denom = m.precision + m.recall;
  m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
}

nlohmann::ordered_json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall},       {"f1", m.f1},
          {"support", m.support},     {"predicted", m.predicted}, {"true_positive", m.true_positive}};
}

}  // namespace

ClassificationReport report_from_deltas(std::span<const double> deltas, std::span<const int> labels,
                                        double dead_band) {
  if (deltas.size() != labels.size()) throw InputError(kModule, "deltas and labels differ in length");
  const auto predicted = classify_steps(deltas, dead_band);
  ClassificationReport r;
  r.dead_band = dead_band;
  r.total = static_cast<std::int64_t>(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw InputError(kModule, "labels must be +1 or -1");
    if (predicted[i] == StepLabel::abstain) {
      ++r.abstained;
      continue;
    }
    ClassMetrics& truth = labels[i] == 1 ? r.positive : r.negative;
    ClassMetrics& guess = predicted[i] == StepLabel::positive ? r.positive : r.negative;
    ++truth.support;
    ++guess.predicted;
    if (&truth == &guess) ++truth.true_positive;
  }
  finalize(r.positive);
  finalize(r.negative);
  return r;
}

std::vector<double> corpus_deltas(const PolicyEvaluator& evaluator, const LabeledCorpus& corpus) {
  std::vector<double> deltas;
  deltas.reserve(corpus.steps.size());
  TokenSeq with_step;
  for (const auto& item : corpus.steps) {
    if (item.problem_index >= corpus.problems.size()) throw InputError(kModule, "corpus item references no problem");
    const Problem& p = corpus.problems[item.problem_index];
    with_step = item.prefix_ids;
    with_step.insert(with_step.end(), item.step_ids.begin(), item.step_ids.end());
    const double before = probe_confidence(evaluator, p.prompt_ids, item.prefix_ids, p.gold_answer_ids);
    const double after = probe_confidence(evaluator, p.prompt_ids, with_step, p.gold_answer_ids);
    deltas.push_back(after - before);
  }
  return deltas;
}

ClassificationReport score_corpus(const PolicyParams& params, const LabeledCorpus& corpus, double dead_band) {
  if (corpus.steps.empty()) throw InputError(kModule, "corpus is empty");
  const PolicyEvaluator eval(params);
  const auto deltas = corpus_deltas(eval, corpus);
  std::vector<int> labels;
  labels.reserve(corpus.steps.size());
  for (const auto& s : corpus.steps) labels.push_back(s.label);
  return report_from_deltas(deltas, labels, dead_band);
}

std::string to_json(const ClassificationReport& r) {
  nlohmann::ordered_json j = {{"positive", class_json(r.positive)},
                              {"negative", class_json(r.negative)},
                              {"abstained", r.abstained},
                              {"total", r.total},
                              {"dead_band", r.dead_band}};
  return j.dump(2);
}

}  // namespace gvps
