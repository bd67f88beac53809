#include "gvps/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gvps/error.hpp"

namespace gvps {

namespace {
constexpr const char* kModule = "advantage";
}

std::vector<double> outcome_advantages(std::span<const int> rewards, bool std_normalize) {
  if (rewards.size() < 2) throw InputError(kModule, "group size must be at least 2");
  double sum = 0.0;
  for (int r : rewards) {
    if (r != 0 && r != 1) throw InputError(kModule, "rewards must be 0 or 1");
    sum += r;
  }
  const double mean = sum / static_cast<double>(rewards.size());
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (int r : rewards) adv.push_back(static_cast<double>(r) - mean);
  if (std_normalize) {
    double var = 0.0;
    for (double a : adv) var += a * a;
    const double sd = std::sqrt(var / static_cast<double>(adv.size()));
    if (sd > 0.0) {
      for (double& a : adv) a /= sd;
    }
  }
  return adv;
}

std::vector<double> hybrid_advantages(double outcome_advantage, std::span<const double> deltas, double alpha,
                                      const SegmentedTrajectory& seg, TokenRange answer_span) {
  if (!(alpha >= 0.0)) throw InputError(kModule, "alpha must be non-negative");
  if (static_cast<int>(deltas.size()) != seg.M) {
    throw InputError(kModule, "expected " + std::to_string(seg.M) + " deltas, got " + std::to_string(deltas.size()));
  }
  const int T = seg.length();
  if (answer_span.begin <= T) throw InputError(kModule, "answer span overlaps the segmented reasoning");
  if (answer_span.begin != T + 1 || answer_span.end < answer_span.begin) {
    throw InputError(kModule, "answer span must start right after the last segment");
  }
  std::vector<double> coeffs;
  coeffs.reserve(static_cast<std::size_t>(answer_span.end - 1));
  for (int m = 0; m < seg.M; ++m) {
    const double c = outcome_advantage + alpha * deltas[static_cast<std::size_t>(m)];
    coeffs.insert(coeffs.end(), static_cast<std::size_t>(seg.segment_length(m)), c);
  }
  coeffs.insert(coeffs.end(), static_cast<std::size_t>(answer_span.size()), outcome_advantage);
  return coeffs;
}

std::string_view to_string(ObjectiveMode mode) { return mode == ObjectiveMode::reinforce ? "reinforce" : "clipped"; }

ObjectiveMode parse_objective_mode(std::string_view name) {
  if (name == "reinforce") return ObjectiveMode::reinforce;
  if (name == "clipped") return ObjectiveMode::clipped;
  throw InputError(kModule, "unknown objective mode '" + std::string(name) + "'");
}

ObjectiveCoeffs policy_objective_coeffs(const GroupBatch& batch, ObjectiveMode mode, double eps_low, double eps_high,
                                        const std::vector<std::vector<double>>* old_logprobs,
                                        const std::vector<std::vector<double>>* current_logprobs) {
  const std::size_t G = batch.size();
  if (batch.per_token_advantages.size() != G) throw InputError(kModule, "per-token advantages missing for group");
  if (mode == ObjectiveMode::clipped) {
    if (old_logprobs == nullptr) throw InputError(kModule, "clipped objective requires old_logprobs");
    if (!(eps_low >= 0.0 && eps_low < 1.0 && eps_high >= 0.0)) throw InputError(kModule, "invalid clip range");
  }
  const auto check_shape = [&](const std::vector<std::vector<double>>* lp, const char* what) {
    if (lp == nullptr) return;
    if (lp->size() != G) throw InputError(kModule, std::string(what) + " has wrong group size");
    for (std::size_t i = 0; i < G; ++i) {
      if ((*lp)[i].size() != batch.per_token_advantages[i].size()) {
        throw InputError(kModule, std::string(what) + " length does not match trajectory");
      }
    }
  };
  check_shape(old_logprobs, "old_logprobs");
  check_shape(current_logprobs, "current_logprobs");
  if (current_logprobs == nullptr) current_logprobs = old_logprobs;
  if (current_logprobs == nullptr) {
    for (std::size_t i = 0; i < G; ++i) {
      if (batch.rollouts[i].step_logprobs.size() != batch.per_token_advantages[i].size()) {
        throw InputError(kModule, "rollout log-probs do not match its advantages");
      }
    }
  }

  ObjectiveCoeffs out;
  out.gradient_coeffs.resize(G);
  out.surrogate_terms.resize(G);
  for (std::size_t i = 0; i < G; ++i) {
    const auto& adv = batch.per_token_advantages[i];
    auto& gc = out.gradient_coeffs[i];
    auto& terms = out.surrogate_terms[i];
    gc.resize(adv.size());
    terms.resize(adv.size());
    for (std::size_t t = 0; t < adv.size(); ++t) {
      const double a = adv[t];
      if (mode == ObjectiveMode::reinforce) {
        gc[t] = a;
        const double lp = current_logprobs ? (*current_logprobs)[i][t] : batch.rollouts[i].step_logprobs[t];
        terms[t] = a * lp;
      } else {
        const double rho = std::exp((*current_logprobs)[i][t] - (*old_logprobs)[i][t]);
        const double clipped = std::clamp(rho, 1.0 - eps_low, 1.0 + eps_high);
        const double unclipped_term = rho * a;
        const double clipped_term = clipped * a;
        terms[t] = std::min(unclipped_term, clipped_term);
        // The min selects the clipped branch only when it is strictly smaller;
        // that branch is constant in theta.
        gc[t] = clipped_term < unclipped_term ? 0.0 : unclipped_term;
      }
      out.surrogate_value += terms[t];
    }
  }
  return out;
}

}  // namespace gvps
