#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gvps/policy.hpp"
#include "gvps/tasks.hpp"

namespace gvps {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;         // non-abstained items carrying this label
  std::int64_t predicted = 0;       // items predicted as this class
  std::int64_t true_positive = 0;
};

struct ClassificationReport {
  ClassMetrics positive;  // label +1
  ClassMetrics negative;  // label -1
  std::int64_t abstained = 0;
  std::int64_t total = 0;
  double dead_band = 0.0;
};

// Classifies each delta with classify_steps and scores it against `labels`
// (+1/-1). Abstained items are counted but excluded from the confusion matrix.
// Empty denominators give 0.
ClassificationReport report_from_deltas(std::span<const double> deltas, std::span<const int> labels,
                                        double dead_band);

// dC of every corpus item: C(prefix + step) - C(prefix), probing the item's
// gold answer with gold-prefix teacher forcing.
std::vector<double> corpus_deltas(const PolicyEvaluator& evaluator, const LabeledCorpus& corpus);

ClassificationReport score_corpus(const PolicyParams& params, const LabeledCorpus& corpus, double dead_band = 0.0);

std::string to_json(const ClassificationReport& report);

}  // namespace gvps
