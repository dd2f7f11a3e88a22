// Exact finite probability distributions and the divergence primitives the
// rest of the library is built on. Sample spaces are finite and enumerated;
// every distribution carries its outcomes in canonical order.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace klgeo {

/// Raised when two objects do not live on the same sample space, or when a
/// container has the wrong shape.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an argument is outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A real number or +inf. Infinity only arises from support-mismatch KL terms.
class ExtendedReal {
 public:
  static ExtendedReal finite(double value);
  static ExtendedReal infinity() { return ExtendedReal{}; }

  bool is_finite() const { return value_.has_value(); }
  bool is_infinite() const { return !value_.has_value(); }

  /// Throws DomainError when infinite.
  double value() const;
  /// IEEE view of the value: +inf for the infinite variant.
  double as_double() const;

  /// "inf" or the 17-significant-digit decimal form.
  std::string to_string() const;

  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  ExtendedReal() = default;
  explicit ExtendedReal(double v) : value_(v) {}
  std::optional<double> value_;
};

using OutcomeLabels = std::vector<std::string>;
/// Sorted, distinct outcome indices.
using OutcomeSubset = std::vector<std::size_t>;

class FiniteDistribution {
 public:
  /// Tolerance on the sum of `probs` after construction.
  static constexpr double kNormTolerance = 1e-12;
  /// Inputs whose sum is within this distance of 1 are renormalized;
  /// anything further away is rejected.
  static constexpr double kRenormalizeTolerance = 1e-9;

  /// Anonymous outcomes (identified by index only).
  explicit FiniteDistribution(std::vector<double> probs);
  FiniteDistribution(std::shared_ptr<const OutcomeLabels> outcomes,
                     std::vector<double> probs);

  static FiniteDistribution uniform(std::size_t n);
  static FiniteDistribution dirac(std::size_t n, std::size_t at);

  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  /// Null for anonymous distributions.
  const std::shared_ptr<const OutcomeLabels>& outcomes() const { return outcomes_; }
  std::string label(std::size_t i) const;

  /// Same canonical outcome order (sizes agree, labels agree when both carry them).
  bool same_space(const FiniteDistribution& other) const;

  /// Same space, probabilities within `tol` componentwise.
  bool approx_equal(const FiniteDistribution& other, double tol) const;

 private:
  std::shared_ptr<const OutcomeLabels> outcomes_;
  std::vector<double> probs_;
};

/// Bounded real reward aligned with the canonical outcome order.
class RewardFn {
 public:
  explicit RewardFn(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return min_; }
  double max() const { return max_; }
  bool is_constant() const { return min_ == max_; }
  /// True when every value is exactly 0 or 1.
  bool is_binary() const;

  /// Outcomes where the reward equals its maximum (resp. minimum).
  OutcomeSubset argmax_set() const;
  OutcomeSubset argmin_set() const;

 private:
  std::vector<double> values_;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// {0,1}-valued reward. Both the valid and invalid sets are nonempty and at
/// least two outcomes are valid.
class BinaryVerifier {
 public:
  explicit BinaryVerifier(std::vector<bool> mask);

  std::size_t size() const { return mask_.size(); }
  bool operator()(std::size_t i) const { return mask_[i]; }
  const std::vector<bool>& mask() const { return mask_; }

  const OutcomeSubset& valid_set() const { return valid_; }
  const OutcomeSubset& invalid_set() const { return invalid_; }

  RewardFn as_reward() const;

 private:
  std::vector<bool> mask_;
  OutcomeSubset valid_;
  OutcomeSubset invalid_;
};

/// KL(p || q) with 0 log 0 = 0; infinite iff p puts mass where q has none.
ExtendedReal kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q);

/// Half the L1 distance.
double total_variation(const FiniteDistribution& p, const FiniteDistribution& q);

/// Shannon entropy in nats.
double entropy(const FiniteDistribution& p);

double expected_reward(const FiniteDistribution& q, const RewardFn& r);
/// q(Y1).
double expected_reward(const FiniteDistribution& q, const BinaryVerifier& v);

/// p(. | s). Throws DomainError when p(s) = 0.
FiniteDistribution condition(const FiniteDistribution& p, const OutcomeSubset& s);

/// Indices with strictly positive probability.
OutcomeSubset support(const FiniteDistribution& p);

/// Total mass p(s).
double mass(const FiniteDistribution& p, const OutcomeSubset& s);

}  // namespace klgeo
