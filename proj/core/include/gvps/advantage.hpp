#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gvps/policy.hpp"
#include "gvps/progress.hpp"
#include "gvps/segmentation.hpp"

namespace gvps {

// A^i = r^i - mean(r). With std_normalize the result is further divided by the
// population standard deviation of r (left as-is when that is zero).
std::vector<double> outcome_advantages(std::span<const int> rewards, bool std_normalize = false);

// 1-based half-open token range [begin, end).
struct TokenRange {
  int begin = 1;
  int end = 1;
  int size() const noexcept { return end - begin; }
};

// Per-token coefficients for one rollout: tokens of segment k get
// A + alpha * dC_k; tokens of the answer span get A. The answer span must start
// right after the last segment, and the result covers [1, answer_span.end).
std::vector<double> hybrid_advantages(double outcome_advantage, std::span<const double> deltas, double alpha,
                                      const SegmentedTrajectory& seg, TokenRange answer_span);

// All rollouts of one prompt. `segments[i]` segments the reasoning part of
// rollouts[i] (everything before the answer span); it has M = 0 when that part
// is empty.
struct GroupBatch {
  std::size_t prompt_ref = 0;
  std::vector<Trajectory> rollouts;
  std::vector<SegmentedTrajectory> segments;
  std::vector<ProgressTrace> progress;
  std::vector<int> rewards;
  std::vector<double> outcome_advantages;
  double alpha = 0.0;
  std::vector<std::vector<double>> per_token_advantages;

  std::size_t size() const noexcept { return rollouts.size(); }
};

enum class ObjectiveMode { reinforce, clipped };

std::string_view to_string(ObjectiveMode mode);
ObjectiveMode parse_objective_mode(std::string_view name);

struct ObjectiveCoeffs {
  // Coefficients to pass to the weighted log-likelihood gradient.
  std::vector<std::vector<double>> gradient_coeffs;
  // Per-token objective terms: adv * log pi for reinforce,
  // min(rho * adv, clip(rho, 1 - eps_low, 1 + eps_high) * adv) for clipped.
  std::vector<std::vector<double>> surrogate_terms;
  double surrogate_value = 0.0;  // sum of all terms
};

// `old_logprobs` are the per-token log-probs recorded when the rollouts were
// sampled; `current_logprobs` are the same tokens under the parameters being
// updated (defaults to old_logprobs, i.e. ratio 1).
ObjectiveCoeffs policy_objective_coeffs(const GroupBatch& batch, ObjectiveMode mode, double eps_low, double eps_high,
                                        const std::vector<std::vector<double>>* old_logprobs = nullptr,
                                        const std::vector<std::vector<double>>* current_logprobs = nullptr);

}  // namespace gvps
