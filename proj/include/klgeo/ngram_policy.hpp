// Autoregressive softmax policies over fixed-length token sequences.
//
// Each position t conditions on the previous context_lengths[t] tokens (0 for
// the first position). A bigram policy uses context length 1 everywhere after
// the first position; a full-order policy conditions on the whole prefix.
// Every (position, context) pair owns one softmax block of vocab_size logits,
// laid out position-major, then context (base-vocab number of the context
// tokens, oldest most significant), then token.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "klgeo/distribution.hpp"
#include "klgeo/tilted_family.hpp"

namespace klgeo {

/// All sequences of `length` tokens over a vocabulary of `vocab_size`,
/// enumerated lexicographically with position 0 most significant.
class SequenceSpace {
 public:
  static constexpr std::size_t kMaxSize = std::size_t{1} << 20;

  SequenceSpace(std::size_t vocab_size, std::size_t length);

  std::size_t vocab_size() const { return vocab_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return size_; }

  std::size_t token(std::size_t index, std::size_t position) const {
    return (*tokens_)[index * length_ + position];
  }
  std::vector<std::size_t> tokens(std::size_t index) const;
  std::size_t index_of(std::span<const std::size_t> tokens) const;

  /// Labels of the form "(0,1,2)".
  const std::shared_ptr<const OutcomeLabels>& labels() const { return labels_; }

  friend bool operator==(const SequenceSpace& a, const SequenceSpace& b) {
    return a.vocab_ == b.vocab_ && a.length_ == b.length_;
  }

 private:
  std::size_t vocab_;
  std::size_t length_;
  std::size_t size_;
  std::shared_ptr<const std::vector<std::uint32_t>> tokens_;
  std::shared_ptr<const OutcomeLabels> labels_;
};

std::vector<std::size_t> bigram_context_lengths(std::size_t length);
std::vector<std::size_t> full_context_lengths(std::size_t length);
/// n-gram model: each position sees at most n - 1 previous tokens.
std::vector<std::size_t> ngram_context_lengths(std::size_t length, std::size_t n);

class NGramPolicy {
 public:
  /// All-zero logits (the uniform distribution).
  NGramPolicy(SequenceSpace space, std::vector<std::size_t> context_lengths);

  static NGramPolicy bigram(const SequenceSpace& space);
  static NGramPolicy full(const SequenceSpace& space);

  /// Logits set to the log conditionals of `dist` under this context
  /// structure. For a full-order policy this reproduces `dist` exactly; for a
  /// restricted order it is the forward-KL projection of `dist` onto the
  /// family. Throws DomainError if any conditional is zero.
  static NGramPolicy from_distribution(const SequenceSpace& space,
                                       std::vector<std::size_t> context_lengths,
                                       const FiniteDistribution& dist);

  const SequenceSpace& space() const { return layout_->space; }
  const std::vector<std::size_t>& context_lengths() const { return layout_->context_lengths; }
  std::size_t num_parameters() const { return logits_.size(); }
  std::size_t num_blocks() const { return logits_.size() / layout_->space.vocab_size(); }
  bool same_family(const NGramPolicy& other) const;

  std::span<const double> logits() const { return logits_; }
  std::span<double> logits() { return logits_; }

  /// Index of the logit for `token` at `position` after `context`.
  std::size_t parameter_index(std::size_t position, std::size_t context, std::size_t token) const;
  /// Start of the softmax block used by sequence `seq` at `position`.
  std::size_t block_offset(std::size_t seq, std::size_t position) const {
    return layout_->offsets[seq * layout_->space.length() + position];
  }

  /// log pi(y) for every sequence, in canonical order. `scratch` is resized as
  /// needed so repeated calls do not allocate.
  void log_probs_into(std::vector<double>& out, std::vector<double>& scratch) const;
  std::vector<double> sequence_log_probs() const;
  std::vector<double> sequence_probs() const;
  FiniteDistribution to_distribution() const;

  /// Gradient in the logits of sum_y w(y) log pi(y).
  std::vector<double> score_gradient(std::span<const double> weights) const;

 private:
  struct Layout {
    SequenceSpace space;
    std::vector<std::size_t> context_lengths;
    std::vector<std::size_t> position_offsets;  // first logit of each position
    std::vector<std::size_t> offsets;           // [seq * T + t] -> block start
    std::size_t num_parameters = 0;
  };
  static std::shared_ptr<const Layout> make_layout(SequenceSpace space,
                                                   std::vector<std::size_t> context_lengths);
  void softmax_blocks(std::vector<double>& log_softmax) const;

  std::shared_ptr<const Layout> layout_;
  std::vector<double> logits_;
};

/// Product of the conditionals of `dist` under the given context structure:
/// the forward-KL projection of `dist` onto that n-gram family (may contain
/// exact zeros). Contexts with no mass get uniform conditionals.
FiniteDistribution project_conditionals(const SequenceSpace& space,
                                        const std::vector<std::size_t>& context_lengths,
                                        const FiniteDistribution& dist);

/// v(y) = [y_1 == y_T]. Throws DomainError for length < 2.
BinaryVerifier make_verifier_first_equals_last(const SequenceSpace& space);

/// Full-order policy with i.i.d. Gaussian(0, stddev) logits drawn in logit
/// order from SeededRng(seed).
NGramPolicy random_base_model(const SequenceSpace& space, std::uint64_t seed, double stddev);

/// Maximize E_pi r - beta KL(pi || a).
struct JBetaObjective {
  TiltedFamily family;
  double beta = 1.0;
};
/// Minimize KL(target || pi).
struct ForwardKlObjective {
  FiniteDistribution target;
};
/// Minimize TVD(pi, target).
struct TvdObjective {
  FiniteDistribution target;
};
using Objective = std::variant<JBetaObjective, ForwardKlObjective, TvdObjective>;

/// True for objectives that are maximized (J_beta).
bool is_maximized(const Objective& objective);

double evaluate_objective(const NGramPolicy& policy, const Objective& objective);

/// Analytic gradient for J_beta and forward KL; central finite differences
/// (h = kFiniteDifferenceStep) for TVD.
std::vector<double> grad_objective(const NGramPolicy& policy, const Objective& objective);

inline constexpr double kFiniteDifferenceStep = 1e-5;

std::vector<double> finite_difference_gradient(const NGramPolicy& policy,
                                               const Objective& objective,
                                               double h = kFiniteDifferenceStep);

}  // namespace klgeo
