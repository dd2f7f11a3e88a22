#include "klgeo/ngram_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include "klgeo/rng.hpp"

namespace klgeo {

SequenceSpace::SequenceSpace(std::size_t vocab_size, std::size_t length)
    : vocab_(vocab_size), length_(length), size_(1) {
  if (vocab_ == 0 || length_ == 0) {
    throw DomainError("SequenceSpace: vocabulary size and length must be positive");
  }
  for (std::size_t t = 0; t < length_; ++t) {
    if (size_ > kMaxSize / vocab_) throw DomainError("SequenceSpace: too many sequences");
    size_ *= vocab_;
  }
  auto tokens = std::make_shared<std::vector<std::uint32_t>>(size_ * length_);
  auto labels = std::make_shared<OutcomeLabels>(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    std::size_t rest = i;
    for (std::size_t t = length_; t-- > 0;) {
      (*tokens)[i * length_ + t] = static_cast<std::uint32_t>(rest % vocab_);
      rest /= vocab_;
    }
    std::string label = "(";
    for (std::size_t t = 0; t < length_; ++t) {
      if (t > 0) label += ',';
      label += std::to_string((*tokens)[i * length_ + t]);
    }
    label += ')';
    (*labels)[i] = std::move(label);
  }
  tokens_ = std::move(tokens);
  labels_ = std::move(labels);
}

std::vector<std::size_t> SequenceSpace::tokens(std::size_t index) const {
  if (index >= size_) throw StructuralError("SequenceSpace::tokens: index out of range");
  std::vector<std::size_t> out(length_);
  for (std::size_t t = 0; t < length_; ++t) out[t] = token(index, t);
  return out;
}

std::size_t SequenceSpace::index_of(std::span<const std::size_t> tokens) const {
  if (tokens.size() != length_) throw StructuralError("SequenceSpace::index_of: wrong length");
  std::size_t index = 0;
  for (std::size_t tok : tokens) {
    if (tok >= vocab_) throw StructuralError("SequenceSpace::index_of: token out of range");
    index = index * vocab_ + tok;
  }
  return index;
}

std::vector<std::size_t> bigram_context_lengths(std::size_t length) {
  return ngram_context_lengths(length, 2);
}

std::vector<std::size_t> full_context_lengths(std::size_t length) {
  std::vector<std::size_t> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = t;
  return out;
}

std::vector<std::size_t> ngram_context_lengths(std::size_t length, std::size_t n) {
  if (n == 0) throw DomainError("ngram_context_lengths: n must be positive");
  std::vector<std::size_t> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = std::min(t, n - 1);
  return out;
}

namespace {

std::size_t context_of(const SequenceSpace& space, std::size_t seq, std::size_t position,
                       std::size_t context_length) {
  std::size_t ctx = 0;
  for (std::size_t s = position - context_length; s < position; ++s) {
    ctx = ctx * space.vocab_size() + space.token(seq, s);
  }
  return ctx;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  while (exp-- > 0) out *= base;
  return out;
}

}  // namespace

std::shared_ptr<const NGramPolicy::Layout> NGramPolicy::make_layout(
    SequenceSpace space, std::vector<std::size_t> context_lengths) {
  const std::size_t T = space.length();
  const std::size_t V = space.vocab_size();
  if (context_lengths.size() != T) {
    throw StructuralError("NGramPolicy: one context length per position is required");
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (context_lengths[t] > t) {
      throw DomainError("NGramPolicy: context at position " + std::to_string(t) +
                        " reaches before the sequence start");
    }
  }
  auto layout = std::make_shared<Layout>(Layout{std::move(space), std::move(context_lengths), {}, {}, 0});
  const auto& sp = layout->space;
  layout->position_offsets.resize(T);
  std::size_t offset = 0;
  for (std::size_t t = 0; t < T; ++t) {
    layout->position_offsets[t] = offset;
    offset += ipow(V, layout->context_lengths[t]) * V;
  }
  layout->num_parameters = offset;
  layout->offsets.resize(sp.size() * T);
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t ctx = context_of(sp, seq, t, layout->context_lengths[t]);
      layout->offsets[seq * T + t] = layout->position_offsets[t] + ctx * V;
    }
  }
  return layout;
}

NGramPolicy::NGramPolicy(SequenceSpace space, std::vector<std::size_t> context_lengths)
    : layout_(make_layout(std::move(space), std::move(context_lengths))) {
  logits_.assign(layout_->num_parameters, 0.0);
}

NGramPolicy NGramPolicy::bigram(const SequenceSpace& space) {
  return NGramPolicy(space, bigram_context_lengths(space.length()));
}

NGramPolicy NGramPolicy::full(const SequenceSpace& space) {
  return NGramPolicy(space, full_context_lengths(space.length()));
}

bool NGramPolicy::same_family(const NGramPolicy& other) const {
  return layout_ == other.layout_ ||
         (space() == other.space() && context_lengths() == other.context_lengths());
}

std::size_t NGramPolicy::parameter_index(std::size_t position, std::size_t context,
                                         std::size_t token) const {
  const std::size_t V = space().vocab_size();
  if (position >= space().length() || token >= V ||
      context >= ipow(V, layout_->context_lengths[position])) {
    throw StructuralError("NGramPolicy::parameter_index: out of range");
  }
  return layout_->position_offsets[position] + context * V + token;
}

void NGramPolicy::softmax_blocks(std::vector<double>& log_softmax) const {
  const std::size_t V = space().vocab_size();
  log_softmax.resize(logits_.size());
  for (std::size_t b = 0; b < logits_.size(); b += V) {
    double hi = logits_[b];
    for (std::size_t k = 1; k < V; ++k) hi = std::max(hi, logits_[b + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < V; ++k) z += std::exp(logits_[b + k] - hi);
    const double log_z = hi + std::log(z);
    for (std::size_t k = 0; k < V; ++k) log_softmax[b + k] = logits_[b + k] - log_z;
  }
}

void NGramPolicy::log_probs_into(std::vector<double>& out, std::vector<double>& scratch) const {
  softmax_blocks(scratch);
  const auto& sp = space();
  const std::size_t T = sp.length();
  out.resize(sp.size());
  const std::size_t* off = layout_->offsets.data();
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    double lp = 0.0;
    for (std::size_t t = 0; t < T; ++t) lp += scratch[off[seq * T + t] + sp.token(seq, t)];
    out[seq] = lp;
  }
}

std::vector<double> NGramPolicy::sequence_log_probs() const {
  std::vector<double> out;
  std::vector<double> scratch;
  log_probs_into(out, scratch);
  return out;
}

std::vector<double> NGramPolicy::sequence_probs() const {
  auto out = sequence_log_probs();
  for (double& v : out) v = std::exp(v);
  return out;
}

FiniteDistribution NGramPolicy::to_distribution() const {
  return FiniteDistribution(space().labels(), sequence_probs());
}

std::vector<double> NGramPolicy::score_gradient(std::span<const double> weights) const {
  const auto& sp = space();
  if (weights.size() != sp.size()) throw StructuralError("score_gradient: weights have wrong length");
  const std::size_t T = sp.length();
  const std::size_t V = sp.vocab_size();
  std::vector<double> log_sm;
  softmax_blocks(log_sm);
  std::vector<double> grad(logits_.size(), 0.0);
  std::vector<double> block_weight(num_blocks(), 0.0);
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    const double w = weights[seq];
    if (w == 0.0) continue;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t off = block_offset(seq, t);
      grad[off + sp.token(seq, t)] += w;
      block_weight[off / V] += w;
    }
  }
  for (std::size_t b = 0; b < block_weight.size(); ++b) {
    if (block_weight[b] == 0.0) continue;
    for (std::size_t k = 0; k < V; ++k) {
      grad[b * V + k] -= block_weight[b] * std::exp(log_sm[b * V + k]);
    }
  }
  return grad;
}

namespace {

// Conditional probability tables of `dist`, in logit layout.
std::vector<double> conditional_tables(const NGramPolicy& shape, const FiniteDistribution& dist) {
  const auto& sp = shape.space();
  if (dist.size() != sp.size()) {
    throw StructuralError("conditional tables: distribution does not match the sequence space");
  }
  const std::size_t V = sp.vocab_size();
  std::vector<double> joint(shape.num_parameters(), 0.0);
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    for (std::size_t t = 0; t < sp.length(); ++t) {
      joint[shape.block_offset(seq, t) + sp.token(seq, t)] += dist[seq];
    }
  }
  for (std::size_t b = 0; b < joint.size(); b += V) {
    double total = 0.0;
    for (std::size_t k = 0; k < V; ++k) total += joint[b + k];
    for (std::size_t k = 0; k < V; ++k) {
      joint[b + k] = total > 0.0 ? joint[b + k] / total : 1.0 / static_cast<double>(V);
    }
  }
  return joint;
}

}  // namespace

NGramPolicy NGramPolicy::from_distribution(const SequenceSpace& space,
                                           std::vector<std::size_t> context_lengths,
                                           const FiniteDistribution& dist) {
  NGramPolicy policy(space, std::move(context_lengths));
  const auto cond = conditional_tables(policy, dist);
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (!(cond[i] > 0.0)) {
      throw DomainError("NGramPolicy::from_distribution: zero conditional probability");
    }
    policy.logits_[i] = std::log(cond[i]);
  }
  return policy;
}

FiniteDistribution project_conditionals(const SequenceSpace& space,
                                        const std::vector<std::size_t>& context_lengths,
                                        const FiniteDistribution& dist) {
  const NGramPolicy shape(space, context_lengths);
  const auto cond = conditional_tables(shape, dist);
  std::vector<double> probs(space.size());
  for (std::size_t seq = 0; seq < space.size(); ++seq) {
    double p = 1.0;
    for (std::size_t t = 0; t < space.length(); ++t) {
      p *= cond[shape.block_offset(seq, t) + space.token(seq, t)];
    }
    probs[seq] = p;
  }
  return FiniteDistribution(space.labels(), std::move(probs));
}

BinaryVerifier make_verifier_first_equals_last(const SequenceSpace& space) {
  if (space.length() < 2) throw DomainError("first-equals-last verifier needs length >= 2");
  std::vector<bool> mask(space.size());
  for (std::size_t seq = 0; seq < space.size(); ++seq) {
    mask[seq] = space.token(seq, 0) == space.token(seq, space.length() - 1);
  }
  return BinaryVerifier(std::move(mask));
}

NGramPolicy random_base_model(const SequenceSpace& space, std::uint64_t seed, double stddev) {
  if (!(stddev > 0.0)) throw DomainError("random_base_model: stddev must be positive");
  NGramPolicy policy = NGramPolicy::full(space);
  SeededRng rng(seed);
  for (double& logit : policy.logits()) logit = rng.gaussian(0.0, stddev);
  return policy;
}

bool is_maximized(const Objective& objective) {
  return std::holds_alternative<JBetaObjective>(objective);
}

namespace {

void check_target(const NGramPolicy& policy, const FiniteDistribution& target) {
  if (target.size() != policy.space().size()) {
    throw StructuralError("objective target does not match the policy's sequence space");
  }
}

void check_objective(const NGramPolicy& policy, const Objective& objective) {
  std::visit(
      [&](const auto& obj) {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, JBetaObjective>) {
          check_target(policy, obj.family.base());
          if (!(obj.beta >= 0.0)) throw DomainError("J_beta objective: beta must be >= 0");
        } else {
          check_target(policy, obj.target);
        }
      },
      objective);
}

template <class Real>
Real evaluate_with(const std::vector<Real>& log_pi, const Objective& objective) {
  using std::abs, std::exp, std::log;
  return std::visit(
      [&](const auto& obj) -> Real {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, JBetaObjective>) {
          const auto a = obj.family.base().probs();
          const auto r = obj.family.reward().values();
          Real reward = 0;
          Real kl = 0;
          for (std::size_t i = 0; i < log_pi.size(); ++i) {
            const Real p = exp(log_pi[i]);
            reward += p * r[i];
            kl += p * (log_pi[i] - log(static_cast<Real>(a[i])));
          }
          return reward - obj.beta * kl;
        } else if constexpr (std::is_same_v<T, ForwardKlObjective>) {
          Real kl = 0;
          for (std::size_t i = 0; i < log_pi.size(); ++i) {
            const Real t = obj.target[i];
            if (t > 0) kl += t * (log(t) - log_pi[i]);
          }
          return kl;
        } else {
          Real sum = 0;
          for (std::size_t i = 0; i < log_pi.size(); ++i) {
            sum += abs(exp(log_pi[i]) - static_cast<Real>(obj.target[i]));
          }
          return 0.5 * sum;
        }
      },
      objective);
}

}  // namespace

double evaluate_objective(const NGramPolicy& policy, const Objective& objective) {
  check_objective(policy, objective);
  return evaluate_with(policy.sequence_log_probs(), objective);
}

namespace {

// Central differences evaluated in Real arithmetic. Perturbing one logit only
// changes its own softmax block, so only the sequences routed through that
// block are re-summed.
template <class Real>
std::vector<double> central_differences(const NGramPolicy& policy, const Objective& objective,
                                        double h) {
  using std::exp, std::log;
  const auto& sp = policy.space();
  const std::size_t V = sp.vocab_size();
  const std::size_t T = sp.length();

  std::vector<std::vector<std::size_t>> users(policy.num_blocks());
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    for (std::size_t t = 0; t < T; ++t) users[policy.block_offset(seq, t) / V].push_back(seq);
  }
  const auto logits = policy.logits();
  std::vector<Real> log_sm(logits.size());
  for (std::size_t b0 = 0; b0 < logits.size(); b0 += V) {
    Real hi = logits[b0];
    for (std::size_t j = 1; j < V; ++j) hi = std::max<Real>(hi, logits[b0 + j]);
    Real z = 0;
    for (std::size_t j = 0; j < V; ++j) z += exp(static_cast<Real>(logits[b0 + j]) - hi);
    const Real log_z = hi + log(z);
    for (std::size_t j = 0; j < V; ++j) log_sm[b0 + j] = static_cast<Real>(logits[b0 + j]) - log_z;
  }
  std::vector<Real> log_pi(sp.size(), Real{0});
  for (std::size_t seq = 0; seq < sp.size(); ++seq) {
    for (std::size_t t = 0; t < T; ++t) {
      log_pi[seq] += log_sm[policy.block_offset(seq, t) + sp.token(seq, t)];
    }
  }
  std::vector<Real> shifted(V);
  std::vector<Real> probe = log_pi;

  auto eval_shifted = [&](std::size_t block, std::size_t k, Real delta) {
    const std::size_t b0 = block * V;
    Real hi = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < V; ++j) {
      shifted[j] = static_cast<Real>(logits[b0 + j]) + (j == k ? delta : Real{0});
      hi = std::max(hi, shifted[j]);
    }
    Real z = 0;
    for (std::size_t j = 0; j < V; ++j) z += exp(shifted[j] - hi);
    const Real log_z = hi + log(z);
    for (std::size_t seq : users[block]) {
      Real lp = 0;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t off = policy.block_offset(seq, t);
        const std::size_t tok = sp.token(seq, t);
        lp += off == b0 ? shifted[tok] - log_z : log_sm[off + tok];
      }
      probe[seq] = lp;
    }
    const Real value = evaluate_with(probe, objective);
    for (std::size_t seq : users[block]) probe[seq] = log_pi[seq];
    return value;
  };

  std::vector<double> grad(policy.num_parameters());
  const Real step = h;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const Real up = eval_shifted(i / V, i % V, step);
    const Real down = eval_shifted(i / V, i % V, -step);
    grad[i] = static_cast<double>((up - down) / (2 * step));
  }
  return grad;
}

}  // namespace

std::vector<double> finite_difference_gradient(const NGramPolicy& policy,
                                               const Objective& objective, double h) {
  if (!(h > 0.0)) throw DomainError("finite_difference_gradient: step must be positive");
  check_objective(policy, objective);
  return central_differences<long double>(policy, objective, h);
}

std::vector<double> grad_objective(const NGramPolicy& policy, const Objective& objective) {
  check_objective(policy, objective);
  if (std::holds_alternative<TvdObjective>(objective)) {
    return central_differences<double>(policy, objective, kFiniteDifferenceStep);
  }
  const auto log_pi = policy.sequence_log_probs();
  std::vector<double> weights(log_pi.size());
  if (const auto* jb = std::get_if<JBetaObjective>(&objective)) {
    // d/dtheta sum_y pi(y) f(y) with f = r - beta log(pi/a); the extra
    // -beta term integrates to zero against the score.
    const auto a = jb->family.base().probs();
    const auto r = jb->family.reward().values();
    for (std::size_t i = 0; i < log_pi.size(); ++i) {
      const double p = std::exp(log_pi[i]);
      weights[i] = p * (r[i] - jb->beta * (log_pi[i] - std::log(a[i])));
    }
    return policy.score_gradient(weights);
  }
  const auto& target = std::get<ForwardKlObjective>(objective).target;
  for (std::size_t i = 0; i < log_pi.size(); ++i) weights[i] = -target[i];
  return policy.score_gradient(weights);
}

}  // namespace klgeo
