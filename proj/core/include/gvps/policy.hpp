#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gvps/vocab.hpp"

namespace gvps {

// Sizes of the windowed autoregressive policy.
//
//   pre    = b + (1/W) * sum_j M_j * E[ctx[n-1-j]]      j = 0..W-1
//   hidden = tanh(pre)
//   logits = U * hidden + c
//
// Slots that fall before the start of the context contribute nothing. Each
// window offset j has its own mixing matrix M_j, so the averaged context still
// knows where each token sits relative to the prediction point.
struct PolicyShape {
  int vocab_size = 0;
  int embed_dim = 16;
  int hidden_dim = 64;
  int window = 8;
  SpecialTokens special{};

  std::size_t parameter_count() const noexcept;
  bool operator==(const PolicyShape&) const = default;
};

// Named region of the flat parameter vector.
struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  // All-zero parameters (uniform policy).
  explicit PolicyParams(PolicyShape shape, std::uint64_t seed = 0);

  // Zero-mean Gaussian entries with standard deviation `scale`.
  static PolicyParams random(const PolicyShape& shape, std::uint64_t seed, double scale = 0.02);

  const PolicyShape& shape() const noexcept { return shape_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<double> theta() noexcept { return theta_; }
  std::span<const double> theta() const noexcept { return theta_; }
  std::size_t size() const noexcept { return theta_.size(); }

  // embedding, mixer, mixer_bias, output, output_bias, in that order.
  std::vector<ParamSlice> layout() const;
  static std::vector<ParamSlice> layout_for(const PolicyShape& shape);

  // Row-major views: embedding(t) is [embed_dim]; mixer(j) is
  // [hidden_dim x embed_dim]; output() is [vocab_size x hidden_dim].
  std::span<double> embedding(TokenId token);
  std::span<const double> embedding(TokenId token) const;
  std::span<double> mixer(int slot);
  std::span<const double> mixer(int slot) const;
  std::span<double> mixer_bias();
  std::span<const double> mixer_bias() const;
  std::span<double> output();
  std::span<const double> output() const;
  std::span<double> output_bias();
  std::span<const double> output_bias() const;

  bool all_finite() const noexcept;

  bool operator==(const PolicyParams&) const = default;

 private:
  PolicyShape shape_{};
  std::uint64_t seed_ = 0;
  std::vector<double> theta_;
};

struct StepDistribution {
  std::vector<double> probs;
  std::vector<double> logprobs;  // nats

  // Shannon entropy in nats, clamped into [0, ln |V|].
  double entropy() const;
};

struct Trajectory {
  TokenSeq prompt_ids;
  TokenSeq response_ids;
  std::vector<double> step_logprobs;  // log-prob of each emitted token under the sampling distribution
  std::vector<double> entropies;      // entropy of each sampling distribution
  bool terminated = false;            // eos emitted

  int length() const noexcept { return static_cast<int>(response_ids.size()); }
};

// Evaluates one fixed parameter vector. Building it precomputes the per-slot
// (token -> hidden) contribution tables, so reuse an evaluator for many calls.
// The referenced params must outlive the evaluator.
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const PolicyParams& params);

  const PolicyParams& params() const noexcept { return *params_; }
  const PolicyShape& shape() const noexcept { return params_->shape(); }

  StepDistribution forward(std::span<const TokenId> context, double temperature = 1.0) const;

  // sum_t log pi(continuation_t | context + continuation_<t), temperature 1.
  double sequence_logprob(std::span<const TokenId> context, std::span<const TokenId> continuation) const;

  // Log-prob of every token of `continuation` (temperature 1).
  std::vector<double> token_logprobs(std::span<const TokenId> context,
                                     std::span<const TokenId> continuation) const;

  // Writes tanh activations into `hidden` and logits into `logits`. `context`
  // must already be validated.
  void activations(std::span<const TokenId> context, std::span<double> hidden,
                   std::span<double> logits) const;

  void validate_context(std::span<const TokenId> context) const;
  void validate_tokens(std::span<const TokenId> tokens) const;

  const std::vector<double>& slot_table() const noexcept { return slot_table_; }

 private:
  const PolicyParams* params_;
  // slot_table_[((j * V) + x) * H + h] = (1/W) * (M_j E[x])_h
  std::vector<double> slot_table_;
};

// Accumulates exact gradients of sum_t coeff_t * log pi(token_t | prefix)
// for one parameter vector. Gradients of the embedding and mixer are gathered
// per (slot, token) and expanded once in finish().
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const PolicyEvaluator& evaluator);

  void add_trajectory(const Trajectory& trajectory, std::span<const double> per_token_coeffs);
  void add_sequence(std::span<const TokenId> context, std::span<const TokenId> continuation,
                    std::span<const double> per_token_coeffs);

  // Full-length gradient laid out like PolicyParams::theta().
  std::vector<double> finish() const;

 private:
  void add_token(std::span<const TokenId> context, TokenId target, double coeff);

  const PolicyEvaluator* eval_;
  std::vector<double> grad_;        // output, output_bias, mixer_bias written directly
  std::vector<double> slot_grad_;   // same layout as slot_table
  std::vector<double> hidden_, logits_, dlogits_, dpre_;
  TokenSeq scratch_;
};

StepDistribution forward(const PolicyParams& params, std::span<const TokenId> context,
                         double temperature = 1.0);

Trajectory sample_trajectory(const PolicyParams& params, std::span<const TokenId> prompt_ids,
                             double temperature, int max_len, std::uint64_t rng_seed);
Trajectory sample_trajectory(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                             double temperature, int max_len, std::uint64_t rng_seed);

double sequence_logprob(const PolicyParams& params, std::span<const TokenId> context,
                        std::span<const TokenId> continuation);

std::vector<double> weighted_logprob_gradient(const PolicyParams& params, const Trajectory& trajectory,
                                              std::span<const double> per_token_coeffs);

// In-place log-softmax of `logits / temperature`; fills probs and logprobs.
void softmax_into(std::span<const double> logits, double temperature, std::span<double> probs,
                  std::span<double> logprobs);

}  // namespace gvps
