#include "gvps/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gvps/error.hpp"
#include "gvps/random.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "policy";

struct Offsets {
  std::size_t embedding, mixer, mixer_bias, output, output_bias, total;
};

Offsets offsets_for(const PolicyShape& s) {
  const auto V = static_cast<std::size_t>(s.vocab_size);
  const auto D = static_cast<std::size_t>(s.embed_dim);
  const auto H = static_cast<std::size_t>(s.hidden_dim);
  const auto W = static_cast<std::size_t>(s.window);
  Offsets o{};
  o.embedding = 0;
  o.mixer = o.embedding + V * D;
  o.mixer_bias = o.mixer + W * H * D;
  o.output = o.mixer_bias + H;
  o.output_bias = o.output + V * H;
  o.total = o.output_bias + V;
  return o;
}

void validate_shape(const PolicyShape& s) {
  if (s.vocab_size < 4) throw InputError(kModule, "vocab_size must be at least 4");
  if (s.embed_dim < 1 || s.hidden_dim < 1 || s.window < 1) {
    throw InputError(kModule, "embed_dim, hidden_dim and window must be positive");
  }
  const TokenId ids[] = {s.special.bos, s.special.eos, s.special.answer_delim};
  for (TokenId id : ids) {
    if (id < 0 || id >= s.vocab_size) throw InputError(kModule, "special token outside vocabulary");
  }
}

}  // namespace

std::size_t PolicyShape::parameter_count() const noexcept { return offsets_for(*this).total; }

PolicyParams::PolicyParams(PolicyShape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  validate_shape(shape_);
  theta_.assign(shape_.parameter_count(), 0.0);
}

PolicyParams PolicyParams::random(const PolicyShape& shape, std::uint64_t seed, double scale) {
  PolicyParams p(shape, seed);
  Rng rng(derive_seed({seed, 0x1417}));
  for (double& v : p.theta_) v = scale * standard_normal(rng);
  return p;
}

std::vector<ParamSlice> PolicyParams::layout_for(const PolicyShape& shape) {
  const Offsets o = offsets_for(shape);
  return {
      {"embedding", o.embedding, o.mixer - o.embedding},
      {"mixer", o.mixer, o.mixer_bias - o.mixer},
      {"mixer_bias", o.mixer_bias, o.output - o.mixer_bias},
      {"output", o.output, o.output_bias - o.output},
      {"output_bias", o.output_bias, o.total - o.output_bias},
  };
}

std::vector<ParamSlice> PolicyParams::layout() const { return layout_for(shape_); }

std::span<double> PolicyParams::embedding(TokenId token) {
  if (token < 0 || token >= shape_.vocab_size) throw InputError(kModule, "token index out of range");
  const auto D = static_cast<std::size_t>(shape_.embed_dim);
  return std::span<double>(theta_).subspan(offsets_for(shape_).embedding + static_cast<std::size_t>(token) * D, D);
}
std::span<const double> PolicyParams::embedding(TokenId token) const {
  return const_cast<PolicyParams*>(this)->embedding(token);
}

std::span<double> PolicyParams::mixer(int slot) {
  if (slot < 0 || slot >= shape_.window) throw InputError(kModule, "window slot out of range");
  const auto block = static_cast<std::size_t>(shape_.hidden_dim) * static_cast<std::size_t>(shape_.embed_dim);
  return std::span<double>(theta_).subspan(offsets_for(shape_).mixer + static_cast<std::size_t>(slot) * block, block);
}
std::span<const double> PolicyParams::mixer(int slot) const { return const_cast<PolicyParams*>(this)->mixer(slot); }

std::span<double> PolicyParams::mixer_bias() {
  const Offsets o = offsets_for(shape_);
  return std::span<double>(theta_).subspan(o.mixer_bias, o.output - o.mixer_bias);
}
std::span<const double> PolicyParams::mixer_bias() const { return const_cast<PolicyParams*>(this)->mixer_bias(); }

std::span<double> PolicyParams::output() {
  const Offsets o = offsets_for(shape_);
  return std::span<double>(theta_).subspan(o.output, o.output_bias - o.output);
}
std::span<const double> PolicyParams::output() const { return const_cast<PolicyParams*>(this)->output(); }

std::span<double> PolicyParams::output_bias() {
  const Offsets o = offsets_for(shape_);
  return std::span<double>(theta_).subspan(o.output_bias, o.total - o.output_bias);
}
std::span<const double> PolicyParams::output_bias() const { return const_cast<PolicyParams*>(this)->output_bias(); }

bool PolicyParams::all_finite() const noexcept {
  return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
}

double StepDistribution::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * logprobs[i];
  }
  const double max_h = std::log(static_cast<double>(probs.size()));
  return std::clamp(h, 0.0, max_h);
}

void softmax_into(std::span<const double> logits, double temperature, std::span<double> probs,
                  std::span<double> logprobs) {
  const double inv_t = 1.0 / temperature;
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits) m = std::max(m, z * inv_t);
  double s = 0.0;
  for (double z : logits) s += std::exp(z * inv_t - m);
  const double lse = m + std::log(s);
  for (std::size_t v = 0; v < logits.size(); ++v) {
    logprobs[v] = std::min(0.0, logits[v] * inv_t - lse);
    probs[v] = std::exp(logprobs[v]);
  }
}

// ---------------------------------------------------------------------------

PolicyEvaluator::PolicyEvaluator(const PolicyParams& params) : params_(&params) {
  if (params.size() == 0) throw InputError(kModule, "empty parameter vector");
  if (!params.all_finite()) throw StateError(kModule, "non-finite parameter");
  const PolicyShape& s = params.shape();
  const int V = s.vocab_size, D = s.embed_dim, H = s.hidden_dim, W = s.window;
  const double inv_w = 1.0 / W;
  slot_table_.assign(static_cast<std::size_t>(W) * V * H, 0.0);
  for (int j = 0; j < W; ++j) {
    const auto M = params.mixer(j);
    for (int x = 0; x < V; ++x) {
      const auto e = params.embedding(x);
      double* row = &slot_table_[(static_cast<std::size_t>(j) * V + x) * H];
      for (int h = 0; h < H; ++h) {
        const double* m = &M[static_cast<std::size_t>(h) * D];
        double acc = 0.0;
        for (int d = 0; d < D; ++d) acc += m[d] * e[d];
        row[h] = inv_w * acc;
      }
    }
  }
}

void PolicyEvaluator::validate_tokens(std::span<const TokenId> tokens) const {
  const int V = shape().vocab_size;
  for (TokenId t : tokens) {
    if (t < 0 || t >= V) throw InputError(kModule, "token index " + std::to_string(t) + " out of range");
  }
}

void PolicyEvaluator::validate_context(std::span<const TokenId> context) const {
  if (context.empty()) throw InputError(kModule, "context must be non-empty");
  if (context.front() != shape().special.bos) throw InputError(kModule, "context must begin with bos");
  validate_tokens(context);
}

void PolicyEvaluator::activations(std::span<const TokenId> context, std::span<double> hidden,
                                  std::span<double> logits) const {
  const PolicyShape& s = shape();
  const int V = s.vocab_size, H = s.hidden_dim, W = s.window;
  const auto bias = params_->mixer_bias();
  std::copy(bias.begin(), bias.end(), hidden.begin());
  const int n = static_cast<int>(context.size());
  for (int j = 0; j < W && j < n; ++j) {
    const TokenId x = context[static_cast<std::size_t>(n - 1 - j)];
    const double* row = &slot_table_[(static_cast<std::size_t>(j) * V + x) * H];
    for (int h = 0; h < H; ++h) hidden[h] += row[h];
  }
  for (int h = 0; h < H; ++h) hidden[h] = std::tanh(hidden[h]);
  const auto U = params_->output();
  const auto c = params_->output_bias();
  for (int v = 0; v < V; ++v) {
    const double* u = &U[static_cast<std::size_t>(v) * H];
    double acc = c[v];
    for (int h = 0; h < H; ++h) acc += u[h] * hidden[h];
    logits[v] = acc;
  }
}

StepDistribution PolicyEvaluator::forward(std::span<const TokenId> context, double temperature) const {
  if (!(temperature > 0.0)) throw InputError(kModule, "temperature must be positive");
  validate_context(context);
  const PolicyShape& s = shape();
  std::vector<double> hidden(static_cast<std::size_t>(s.hidden_dim));
  std::vector<double> logits(static_cast<std::size_t>(s.vocab_size));
  activations(context, hidden, logits);
  StepDistribution out;
  out.probs.resize(logits.size());
  out.logprobs.resize(logits.size());
  softmax_into(logits, temperature, out.probs, out.logprobs);
  return out;
}

std::vector<double> PolicyEvaluator::token_logprobs(std::span<const TokenId> context,
                                                    std::span<const TokenId> continuation) const {
  validate_context(context);
  validate_tokens(continuation);
  const PolicyShape& s = shape();
  const auto V = static_cast<std::size_t>(s.vocab_size);
  std::vector<double> hidden(static_cast<std::size_t>(s.hidden_dim)), logits(V), probs(V), logprobs(V);
  TokenSeq buf(context.begin(), context.end());
  buf.reserve(context.size() + continuation.size());
  std::vector<double> out;
  out.reserve(continuation.size());
  for (TokenId t : continuation) {
    activations(buf, hidden, logits);
    softmax_into(logits, 1.0, probs, logprobs);
    out.push_back(logprobs[static_cast<std::size_t>(t)]);
    buf.push_back(t);
  }
  return out;
}

double PolicyEvaluator::sequence_logprob(std::span<const TokenId> context,
                                         std::span<const TokenId> continuation) const {
  if (continuation.empty()) throw InputError(kModule, "continuation must be non-empty");
  double total = 0.0;
  for (double lp : token_logprobs(context, continuation)) total += lp;
  return std::min(total, 0.0);
}

// ---------------------------------------------------------------------------

GradientAccumulator::GradientAccumulator(const PolicyEvaluator& evaluator) : eval_(&evaluator) {
  const PolicyShape& s = evaluator.shape();
  grad_.assign(evaluator.params().size(), 0.0);
  slot_grad_.assign(evaluator.slot_table().size(), 0.0);
  hidden_.resize(static_cast<std::size_t>(s.hidden_dim));
  dpre_.resize(static_cast<std::size_t>(s.hidden_dim));
  logits_.resize(static_cast<std::size_t>(s.vocab_size));
  dlogits_.resize(static_cast<std::size_t>(s.vocab_size));
}

void GradientAccumulator::add_token(std::span<const TokenId> context, TokenId target, double coeff) {
  const PolicyShape& s = eval_->shape();
  const int V = s.vocab_size, H = s.hidden_dim, W = s.window;
  const PolicyParams& p = eval_->params();
  const auto layout = offsets_for(s);

  eval_->activations(context, hidden_, logits_);
  // dlogits = coeff * (onehot(target) - softmax(logits)); reuse dlogits_ for probs first.
  {
    double m = -std::numeric_limits<double>::infinity();
    for (double z : logits_) m = std::max(m, z);
    double sum = 0.0;
    for (int v = 0; v < V; ++v) {
      dlogits_[v] = std::exp(logits_[v] - m);
      sum += dlogits_[v];
    }
    for (int v = 0; v < V; ++v) dlogits_[v] = -coeff * (dlogits_[v] / sum);
    dlogits_[static_cast<std::size_t>(target)] += coeff;
  }

  double* g_out = &grad_[layout.output];
  double* g_out_bias = &grad_[layout.output_bias];
  const auto U = p.output();
  std::fill(dpre_.begin(), dpre_.end(), 0.0);
  for (int v = 0; v < V; ++v) {
    const double dl = dlogits_[v];
    g_out_bias[v] += dl;
    double* gu = g_out + static_cast<std::size_t>(v) * H;
    const double* u = &U[static_cast<std::size_t>(v) * H];
    for (int h = 0; h < H; ++h) {
      gu[h] += dl * hidden_[h];
      dpre_[h] += dl * u[h];
    }
  }
  double* g_mb = &grad_[layout.mixer_bias];
  for (int h = 0; h < H; ++h) {
    dpre_[h] *= 1.0 - hidden_[h] * hidden_[h];
    g_mb[h] += dpre_[h];
  }
  const int n = static_cast<int>(context.size());
  for (int j = 0; j < W && j < n; ++j) {
    const TokenId x = context[static_cast<std::size_t>(n - 1 - j)];
    double* row = &slot_grad_[(static_cast<std::size_t>(j) * V + x) * H];
    for (int h = 0; h < H; ++h) row[h] += dpre_[h];
  }
}

void GradientAccumulator::add_sequence(std::span<const TokenId> context, std::span<const TokenId> continuation,
                                       std::span<const double> per_token_coeffs) {
  if (per_token_coeffs.size() != continuation.size()) {
    throw InputError(kModule, "coefficient count " + std::to_string(per_token_coeffs.size()) +
                                  " does not match token count " + std::to_string(continuation.size()));
  }
  eval_->validate_context(context);
  eval_->validate_tokens(continuation);
  scratch_.assign(context.begin(), context.end());
  for (std::size_t t = 0; t < continuation.size(); ++t) {
    if (per_token_coeffs[t] != 0.0) add_token(scratch_, continuation[t], per_token_coeffs[t]);
    scratch_.push_back(continuation[t]);
  }
}

void GradientAccumulator::add_trajectory(const Trajectory& trajectory, std::span<const double> per_token_coeffs) {
  add_sequence(trajectory.prompt_ids, trajectory.response_ids, per_token_coeffs);
}

std::vector<double> GradientAccumulator::finish() const {
  const PolicyShape& s = eval_->shape();
  const int V = s.vocab_size, D = s.embed_dim, H = s.hidden_dim, W = s.window;
  const PolicyParams& p = eval_->params();
  const auto layout = offsets_for(s);
  const double inv_w = 1.0 / W;
  std::vector<double> g = grad_;
  for (int j = 0; j < W; ++j) {
    const auto M = p.mixer(j);
    double* gM = &g[layout.mixer + static_cast<std::size_t>(j) * H * D];
    for (int x = 0; x < V; ++x) {
      const double* sg = &slot_grad_[(static_cast<std::size_t>(j) * V + x) * H];
      const auto e = p.embedding(x);
      double* gE = &g[layout.embedding + static_cast<std::size_t>(x) * D];
      for (int h = 0; h < H; ++h) {
        const double a = inv_w * sg[h];
        if (a == 0.0) continue;
        const double* m = &M[static_cast<std::size_t>(h) * D];
        double* gm = gM + static_cast<std::size_t>(h) * D;
        for (int d = 0; d < D; ++d) {
          gm[d] += a * e[d];
          gE[d] += a * m[d];
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

StepDistribution forward(const PolicyParams& params, std::span<const TokenId> context, double temperature) {
  return PolicyEvaluator(params).forward(context, temperature);
}

Trajectory sample_trajectory(const PolicyEvaluator& evaluator, std::span<const TokenId> prompt_ids,
                             double temperature, int max_len, std::uint64_t rng_seed) {
  if (!(temperature > 0.0)) throw InputError(kModule, "temperature must be positive");
  if (max_len < 1) throw InputError(kModule, "max_len must be at least 1");
  evaluator.validate_context(prompt_ids);
  const PolicyShape& s = evaluator.shape();
  const auto V = static_cast<std::size_t>(s.vocab_size);
  std::vector<double> hidden(static_cast<std::size_t>(s.hidden_dim)), logits(V), probs(V), logprobs(V);

  Trajectory traj;
  traj.prompt_ids.assign(prompt_ids.begin(), prompt_ids.end());
  TokenSeq context = traj.prompt_ids;
  context.reserve(context.size() + static_cast<std::size_t>(max_len));
  Rng rng(rng_seed);
  const double max_entropy = std::log(static_cast<double>(V));

  for (int step = 0; step < max_len; ++step) {
    evaluator.activations(context, hidden, logits);
    softmax_into(logits, temperature, probs, logprobs);
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = V;
    for (std::size_t v = 0; v < V; ++v) {
      cum += probs[v];
      if (u < cum) {
        pick = v;
        break;
      }
    }
    if (pick == V) {  // u landed in the rounding gap above the cumulative sum
      for (std::size_t v = V; v-- > 0;) {
        if (probs[v] > 0.0) {
          pick = v;
          break;
        }
      }
    }
    double entropy = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      if (probs[v] > 0.0) entropy -= probs[v] * logprobs[v];
    }
    const auto token = static_cast<TokenId>(pick);
    traj.response_ids.push_back(token);
    traj.step_logprobs.push_back(logprobs[pick]);
    traj.entropies.push_back(std::clamp(entropy, 0.0, max_entropy));
    context.push_back(token);
    if (token == s.special.eos) {
      traj.terminated = true;
      break;
    }
  }
  return traj;
}

Trajectory sample_trajectory(const PolicyParams& params, std::span<const TokenId> prompt_ids, double temperature,
                             int max_len, std::uint64_t rng_seed) {
  return sample_trajectory(PolicyEvaluator(params), prompt_ids, temperature, max_len, rng_seed);
}

double sequence_logprob(const PolicyParams& params, std::span<const TokenId> context,
                        std::span<const TokenId> continuation) {
  return PolicyEvaluator(params).sequence_logprob(context, continuation);
}

std::vector<double> weighted_logprob_gradient(const PolicyParams& params, const Trajectory& trajectory,
                                              std::span<const double> per_token_coeffs) {
  if (per_token_coeffs.size() != trajectory.response_ids.size()) {
    throw InputError(kModule, "per_token_coeffs length must equal trajectory length");
  }
  PolicyEvaluator eval(params);
  GradientAccumulator acc(eval);
  acc.add_trajectory(trajectory, per_token_coeffs);
  return acc.finish();
}

}  // namespace gvps
