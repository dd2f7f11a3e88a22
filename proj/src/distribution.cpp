#include "klgeo/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "klgeo/format.hpp"

namespace klgeo {

ExtendedReal ExtendedReal::finite(double value) {
  if (!std::isfinite(value)) {
    throw DomainError("ExtendedReal::finite: value is not finite");
  }
  return ExtendedReal(value);
}

double ExtendedReal::value() const {
  if (!value_) throw DomainError("ExtendedReal: value is +inf");
  return *value_;
}

double ExtendedReal::as_double() const {
  return value_ ? *value_ : std::numeric_limits<double>::infinity();
}

std::string ExtendedReal::to_string() const {
  return value_ ? format_double(*value_) : std::string("inf");
}

namespace {

void check_same_space(const FiniteDistribution& p, const FiniteDistribution& q,
                      const char* op) {
  if (!p.same_space(q)) {
    throw StructuralError(std::string(op) + ": distributions live on different sample spaces (" +
                          std::to_string(p.size()) + " vs " + std::to_string(q.size()) +
                          " outcomes)");
  }
}

void check_subset(const OutcomeSubset& s, std::size_t n, const char* op) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= n) throw StructuralError(std::string(op) + ": outcome index out of range");
    if (i > 0 && s[i] <= s[i - 1]) {
      throw StructuralError(std::string(op) + ": subset must be sorted and distinct");
    }
  }
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs)
    : FiniteDistribution(nullptr, std::move(probs)) {}

FiniteDistribution::FiniteDistribution(std::shared_ptr<const OutcomeLabels> outcomes,
                                       std::vector<double> probs)
    : outcomes_(std::move(outcomes)), probs_(std::move(probs)) {
  if (probs_.empty()) throw StructuralError("FiniteDistribution: empty sample space");
  if (outcomes_ && outcomes_->size() != probs_.size()) {
    throw StructuralError("FiniteDistribution: outcome labels and probabilities differ in length");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("FiniteDistribution: probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    throw DomainError("FiniteDistribution: probabilities sum to " + format_double(total));
  }
  if (total != 1.0) {
    for (double& p : probs_) p /= total;
  }
}

FiniteDistribution FiniteDistribution::uniform(std::size_t n) {
  if (n == 0) throw StructuralError("uniform: empty sample space");
  return FiniteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FiniteDistribution FiniteDistribution::dirac(std::size_t n, std::size_t at) {
  if (at >= n) throw StructuralError("dirac: index out of range");
  std::vector<double> probs(n, 0.0);
  probs[at] = 1.0;
  return FiniteDistribution(std::move(probs));
}

std::string FiniteDistribution::label(std::size_t i) const {
  if (outcomes_) return (*outcomes_)[i];
  return "y" + std::to_string(i + 1);
}

bool FiniteDistribution::same_space(const FiniteDistribution& other) const {
  if (size() != other.size()) return false;
  if (!outcomes_ || !other.outcomes_ || outcomes_ == other.outcomes_) return true;
  return *outcomes_ == *other.outcomes_;
}

bool FiniteDistribution::approx_equal(const FiniteDistribution& other, double tol) const {
  if (!same_space(other)) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::abs(probs_[i] - other.probs_[i]) > tol) return false;
  }
  return true;
}

RewardFn::RewardFn(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw StructuralError("RewardFn: empty sample space");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("RewardFn: rewards must be finite");
  }
  auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

bool RewardFn::is_binary() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

OutcomeSubset RewardFn::argmax_set() const {
  OutcomeSubset s;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == max_) s.push_back(i);
  }
  return s;
}

OutcomeSubset RewardFn::argmin_set() const {
  OutcomeSubset s;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == min_) s.push_back(i);
  }
  return s;
}

BinaryVerifier::BinaryVerifier(std::vector<bool> mask) : mask_(std::move(mask)) {
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    (mask_[i] ? valid_ : invalid_).push_back(i);
  }
  if (valid_.size() < 2) {
    throw DomainError("BinaryVerifier: at least two valid outcomes are required");
  }
  if (invalid_.empty()) throw DomainError("BinaryVerifier: no invalid outcomes");
}

RewardFn BinaryVerifier::as_reward() const {
  std::vector<double> values(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) values[i] = mask_[i] ? 1.0 : 0.0;
  return RewardFn(std::move(values));
}

ExtendedReal kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q) {
  check_same_space(p, q, "kl_divergence");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    if (q[i] == 0.0) return ExtendedReal::infinity();
    sum += pi * std::log(pi / q[i]);
  }
  // Rounding can leave a tiny negative value when p == q.
  return ExtendedReal::finite(std::max(sum, 0.0));
}

double total_variation(const FiniteDistribution& p, const FiniteDistribution& q) {
  check_same_space(p, q, "total_variation");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return std::min(0.5 * sum, 1.0);
}

double entropy(const FiniteDistribution& p) {
  double h = 0.0;
  for (double pi : p.probs()) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return std::max(h, 0.0);
}

double expected_reward(const FiniteDistribution& q, const RewardFn& r) {
  if (q.size() != r.size()) throw StructuralError("expected_reward: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += q[i] * r[i];
  return sum;
}

double expected_reward(const FiniteDistribution& q, const BinaryVerifier& v) {
  if (q.size() != v.size()) throw StructuralError("expected_reward: dimension mismatch");
  return std::min(mass(q, v.valid_set()), 1.0);
}

double mass(const FiniteDistribution& p, const OutcomeSubset& s) {
  check_subset(s, p.size(), "mass");
  double total = 0.0;
  for (std::size_t i : s) total += p[i];
  return total;
}

FiniteDistribution condition(const FiniteDistribution& p, const OutcomeSubset& s) {
  const double ps = mass(p, s);
  if (ps <= 0.0) throw DomainError("condition: conditioning on null set");
  std::vector<double> probs(p.size(), 0.0);
  for (std::size_t i : s) probs[i] = p[i] / ps;
  return FiniteDistribution(p.outcomes(), std::move(probs));
}

OutcomeSubset support(const FiniteDistribution& p) {
  OutcomeSubset s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s.push_back(i);
  }
  return s;
}

}  // namespace klgeo
