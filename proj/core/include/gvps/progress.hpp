#pragma once

#include <span>
#include <vector>

#include "gvps/policy.hpp"
#include "gvps/segmentation.hpp"

namespace gvps {

// Belief in the gold answer after each segment. log_c_values is the primary
// representation. c_values are exp(log_c_values) snapped to a 2^-52 grid and
// deltas are their differences, so summing deltas left to right reproduces
// C_M - C_0 exactly.
struct ProgressTrace {
  std::vector<double> c_values;      // C_0..C_M
  std::vector<double> log_c_values;  // nats
  std::vector<double> deltas;        // dC_1..dC_M

  int M() const noexcept { return static_cast<int>(deltas.size()); }
};

// log pi(gold_answer | prompt + partial + answer_delim). The delimiter's own
// probability is not included.
double probe_log_confidence(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                            std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids);

double probe_confidence(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                        std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids);
double probe_confidence(const PolicyParams& params, std::span<const TokenId> prompt_ids,
                        std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids);

// One probe at the empty prefix and one after each segment.
ProgressTrace compute_progress(const PolicyEvaluator& evaluator, const SegmentedTrajectory& seg,
                               std::span<const TokenId> gold_answer_ids);
ProgressTrace compute_progress(const PolicyParams& params, const SegmentedTrajectory& seg,
                               std::span<const TokenId> gold_answer_ids);

enum class StepLabel : int { negative = -1, abstain = 0, positive = 1 };

// dC > dead_band -> positive, dC < -dead_band -> negative, else abstain.
std::vector<StepLabel> classify_steps(std::span<const double> deltas, double dead_band = 0.0);

}  // namespace gvps
