#include "gvps/progress.hpp"

#include <algorithm>
#include <cmath>

#include "gvps/error.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "progress";

// Confidence values live on the grid k * 2^-52, k in [0, 2^52]. Every
// difference of two grid points and every partial sum of consecutive
// differences is then exactly representable, so the deltas telescope to
// C_M - C_0 bit-for-bit. The snap moves a value by at most 2^-53.
double snap_to_grid(double c) {
  return std::ldexp(std::nearbyint(std::ldexp(std::clamp(c, 0.0, 1.0), 52)), -52);
}

}  // namespace

double probe_log_confidence(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                            std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids) {
  if (gold_answer_ids.empty()) throw InputError(kModule, "gold answer must be non-empty");
  TokenSeq context;
  context.reserve(prompt_ids.size() + partial_response_ids.size() + 1);
  context.insert(context.end(), prompt_ids.begin(), prompt_ids.end());
  context.insert(context.end(), partial_response_ids.begin(), partial_response_ids.end());
  context.push_back(evaluator.shape().special.answer_delim);
  return evaluator.sequence_logprob(context, gold_answer_ids);
}

double probe_confidence(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                        std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids) {
  return std::min(1.0, std::exp(probe_log_confidence(evaluator, prompt_ids, partial_response_ids, gold_answer_ids)));
}

double probe_confidence(const PolicyParams& params, std::span<const TokenId> prompt_ids,
                        std::span<const TokenId> partial_response_ids, std::span<const TokenId> gold_answer_ids) {
  return probe_confidence(PolicyEvaluator(params), prompt_ids, partial_response_ids, gold_answer_ids);
}

ProgressTrace compute_progress(const PolicyEvaluator& evaluator, const SegmentedTrajectory& seg,
                               std::span<const TokenId> gold_answer_ids) {
  if (seg.M < 1 || static_cast<int>(seg.boundaries.size()) != seg.M + 1) {
    throw InputError(kModule, "segmentation must have M >= 1 segments");
  }
  const auto& prompt = seg.trajectory.prompt_ids;
  const std::span<const TokenId> response(seg.trajectory.response_ids);
  ProgressTrace trace;
  trace.log_c_values.reserve(static_cast<std::size_t>(seg.M) + 1);
  trace.log_c_values.push_back(probe_log_confidence(evaluator, prompt, {}, gold_answer_ids));
  for (int k = 1; k <= seg.M; ++k) {
    const auto end = static_cast<std::size_t>(seg.boundaries[k] - 1);
    trace.log_c_values.push_back(probe_log_confidence(evaluator, prompt, response.first(end), gold_answer_ids));
  }
  for (double lc : trace.log_c_values) trace.c_values.push_back(snap_to_grid(std::exp(lc)));
  for (std::size_t k = 1; k < trace.c_values.size(); ++k) {
    trace.deltas.push_back(trace.c_values[k] - trace.c_values[k - 1]);
  }
  return trace;
}

ProgressTrace compute_progress(const PolicyParams& params, const SegmentedTrajectory& seg,
                               std::span<const TokenId> gold_answer_ids) {
  return compute_progress(PolicyEvaluator(params), seg, gold_answer_ids);
}

std::vector<StepLabel> classify_steps(std::span<const double> deltas, double dead_band) {
  if (!(dead_band >= 0.0)) throw InputError(kModule, "dead_band must be non-negative");
  std::vector<StepLabel> labels;
  labels.reserve(deltas.size());
  for (double d : deltas) {
    if (d > dead_band) {
      labels.push_back(StepLabel::positive);
    } else if (d < -dead_band) {
      labels.push_back(StepLabel::negative);
    } else {
      labels.push_back(StepLabel::abstain);
    }
  }
  return labels;
}

}  // namespace gvps
