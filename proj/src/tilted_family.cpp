#include "klgeo/tilted_family.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "klgeo/format.hpp"

namespace klgeo {

namespace binary {

namespace {
void check_a1(double a1) {
  if (!(a1 > 0.0 && a1 < 1.0)) throw DomainError("binary: A1 must lie in (0, 1)");
}
}  // namespace

double log_partition(double a1, double lambda) {
  check_a1(a1);
  const double a0 = 1.0 - a1;
  if (lambda > 0.0) return lambda + std::log(a1 + a0 * std::exp(-lambda));
  return std::log(a0 + a1 * std::exp(lambda));
}

double moment(double a1, double lambda) {
  check_a1(a1);
  const double a0 = 1.0 - a1;
  if (lambda > 0.0) return a1 / (a1 + a0 * std::exp(-lambda));
  const double t = a1 * std::exp(lambda);
  return t / (a0 + t);
}

double natural_param(double a1, double mu) {
  check_a1(a1);
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("natural_param: unattainable moment " + format_double(mu));
  const double a0 = 1.0 - a1;
  // Single log of a ratio of products so that mu == a1 yields exactly 0.
  return std::log((mu * a0) / ((1.0 - mu) * a1));
}

double divergence_cost(double a1, double mu) {
  check_a1(a1);
  if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("divergence_cost: unattainable moment " + format_double(mu));
  const double a0 = 1.0 - a1;
  double k = 0.0;
  if (mu > 0.0) k += mu * std::log(mu / a1);
  if (mu < 1.0) k += (1.0 - mu) * std::log((1.0 - mu) / a0);
  return std::max(k, 0.0);
}

double tvd_to_filtered(double a1, double lambda) {
  check_a1(a1);
  const double a0 = 1.0 - a1;
  if (lambda > 0.0) return a0 * std::exp(-lambda) / (a0 * std::exp(-lambda) + a1);
  return a0 / (a0 + a1 * std::exp(lambda));
}

double fkl_from_filtered(double a1, double lambda) {
  check_a1(a1);
  const double a0 = 1.0 - a1;
  const double ratio = a0 / a1;
  if (lambda < 0.0) return -lambda + std::log(ratio) + std::log1p(std::exp(lambda) / ratio);
  return std::log1p(ratio * std::exp(-lambda));
}

}  // namespace binary

TiltedFamily::TiltedFamily(FiniteDistribution base, RewardFn reward)
    : base_(std::move(base)), reward_(std::move(reward)) {
  if (base_.size() != reward_.size()) {
    throw StructuralError("TiltedFamily: base and reward differ in length");
  }
  for (double p : base_.probs()) {
    if (!(p > 0.0)) throw DomainError("TiltedFamily: base distribution must have full support");
  }
  if (reward_.is_constant()) throw DomainError("TiltedFamily: reward is constant");
  if (reward_.is_binary()) valid_mass_ = mass(base_, reward_.argmax_set());
}

TiltedFamily::TiltedFamily(FiniteDistribution base, const BinaryVerifier& verifier)
    : TiltedFamily(std::move(base), verifier.as_reward()) {}

double TiltedFamily::valid_mass() const {
  if (!valid_mass_) throw DomainError("TiltedFamily: reward is not binary");
  return *valid_mass_;
}

namespace {

void check_finite_lambda(double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
}

// Shift for log-sum-exp: the largest exponent lambda * r(y).
double exponent_shift(const TiltedFamily& fam, double lambda) {
  return lambda >= 0.0 ? lambda * fam.max_reward() : lambda * fam.min_reward();
}

}  // namespace

double log_partition(const TiltedFamily& fam, double lambda) {
  check_finite_lambda(lambda);
  const auto a = fam.base().probs();
  const auto r = fam.reward().values();
  const double shift = exponent_shift(fam, lambda);
  double z = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) z += a[i] * std::exp(lambda * r[i] - shift);
  return shift + std::log(z);
}

FiniteDistribution tilted(const TiltedFamily& fam, double lambda) {
  const double log_z = log_partition(fam, lambda);
  const auto a = fam.base().probs();
  const auto r = fam.reward().values();
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * std::exp(lambda * r[i] - log_z);
  return FiniteDistribution(fam.base().outcomes(), std::move(p));
}

double moment(const TiltedFamily& fam, double lambda) {
  return expected_reward(tilted(fam, lambda), fam.reward());
}

double moment_variance(const TiltedFamily& fam, double lambda) {
  const auto p = tilted(fam, lambda);
  const auto r = fam.reward().values();
  const double mu = expected_reward(p, fam.reward());
  double var = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) var += p[i] * (r[i] - mu) * (r[i] - mu);
  return var;
}

namespace {

void check_open_range(const TiltedFamily& fam, double mu) {
  if (!(mu > fam.min_reward() && mu < fam.max_reward())) {
    throw DomainError("natural_param: unattainable moment " + format_double(mu) + " outside (" +
                      format_double(fam.min_reward()) + ", " + format_double(fam.max_reward()) +
                      ")");
  }
}

}  // namespace

namespace {

// Safeguarded Newton on a strictly increasing residual g with g' = Var_{p_lambda} r:
// the Newton step is taken only when it stays inside the current bracket.
template <class Residual>
double solve_increasing(const TiltedFamily& fam, Residual&& g) {
  constexpr int kMaxIterations = 200;
  constexpr double kMaxBracket = 1e6;

  double lo = -60.0;
  double hi = 60.0;
  while (g(lo) > 0.0 && lo > -kMaxBracket) lo *= 2.0;
  while (g(hi) < 0.0 && hi < kMaxBracket) hi *= 2.0;

  double lambda = std::clamp(0.0, lo, hi);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double f = g(lambda);
    if (f == 0.0) return lambda;
    if (f > 0.0) {
      hi = lambda;
    } else {
      lo = lambda;
    }
    const double var = moment_variance(fam, lambda);
    double next = 0.5 * (lo + hi);
    if (var > 0.0) {
      const double newton = lambda - f / var;
      if (newton > lo && newton < hi) next = newton;
    }
    if (std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(lambda))) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace

double natural_param_numeric(const TiltedFamily& fam, double mu) {
  check_open_range(fam, mu);
  return solve_increasing(fam, [&](double l) { return moment(fam, l) - mu; });
}

double natural_param(const TiltedFamily& fam, double mu) {
  if (fam.is_binary()) {
    check_open_range(fam, mu);
    return binary::natural_param(fam.valid_mass(), mu);
  }
  return natural_param_numeric(fam, mu);
}

MomentCoordinate moment_coordinate(const TiltedFamily& fam, double lambda) {
  if (fam.is_binary()) {
    const double a1 = fam.valid_mass();
    const double mu = binary::moment(a1, lambda);
    return {mu, binary::tvd_to_filtered(a1, lambda), mu};
  }
  const auto p = tilted(fam, lambda);
  const auto r = fam.reward().values();
  const double hi = fam.max_reward();
  const double lo = fam.min_reward();
  MomentCoordinate c{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < r.size(); ++i) {
    c.mu += p[i] * r[i];
    c.gap_upper += p[i] * (hi - r[i]);
    c.gap_lower += p[i] * (r[i] - lo);
  }
  return c;
}

double natural_param(const TiltedFamily& fam, const MomentCoordinate& c) {
  if (!(c.gap_upper > 0.0 && c.gap_lower > 0.0)) {
    throw DomainError("natural_param: moment coordinate on the reward boundary");
  }
  if (fam.is_binary()) {
    const double a1 = fam.valid_mass();
    return std::log((c.gap_lower * (1.0 - a1)) / (c.gap_upper * a1));
  }
  const double hi = fam.max_reward();
  const double lo = fam.min_reward();
  // Solve on the gap to the nearer bound, where the target is known to full
  // relative precision.
  if (c.gap_upper < c.gap_lower) {
    return solve_increasing(fam, [&](double l) {
      const auto p = tilted(fam, l);
      const auto r = fam.reward().values();
      double gap = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) gap += p[i] * (hi - r[i]);
      return c.gap_upper - gap;
    });
  }
  return solve_increasing(fam, [&](double l) {
    const auto p = tilted(fam, l);
    const auto r = fam.reward().values();
    double gap = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) gap += p[i] * (r[i] - lo);
    return gap - c.gap_lower;
  });
}

double divergence_cost(const TiltedFamily& fam, double mu) {
  if (mu == fam.max_reward()) {
    return attained_bound_limits(fam, BoundDirection::upper).kl_ceiling;
  }
  if (mu == fam.min_reward()) {
    return attained_bound_limits(fam, BoundDirection::lower).kl_ceiling;
  }
  if (!(mu > fam.min_reward() && mu < fam.max_reward())) {
    throw DomainError("divergence_cost: unattainable moment " + format_double(mu));
  }
  if (fam.is_binary()) return binary::divergence_cost(fam.valid_mass(), mu);
  const double lambda = natural_param_numeric(fam, mu);
  return std::max(lambda * mu - log_partition(fam, lambda), 0.0);
}

GeometryPoint geometry_point(const TiltedFamily& fam, double lambda) {
  GeometryPoint pt;
  pt.lambda = lambda;
  pt.log_z = log_partition(fam, lambda);
  pt.mu = moment(fam, lambda);
  pt.kappa = std::max(lambda * pt.mu - pt.log_z, 0.0);
  return pt;
}

double kl_difference(const TiltedFamily& fam, const FiniteDistribution& q, double l1, double l2) {
  if (!q.same_space(fam.base())) throw StructuralError("kl_difference: q lives on another space");
  const double mu_q = expected_reward(q, fam.reward());
  return log_partition(fam, l2) - log_partition(fam, l1) + mu_q * (l1 - l2);
}

double j_beta(const TiltedFamily& fam, const FiniteDistribution& q, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("j_beta: beta must be finite and >= 0");
  const double reward = expected_reward(q, fam.reward());
  if (beta == 0.0) return reward;
  // The base has full support, so this KL is always finite.
  return reward - beta * kl_divergence(q, fam.base()).value();
}

ComparisonReport compare(const TiltedFamily& fam, const FiniteDistribution& pi,
                         const FiniteDistribution& pi2, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("compare: beta must be > 0");
  const auto p_lambda = tilted(fam, 1.0 / beta);
  ComparisonReport rep;
  rep.d_j = j_beta(fam, pi2, beta) - j_beta(fam, pi, beta);
  rep.d_kl_tilted =
      kl_divergence(pi, p_lambda).value() - kl_divergence(pi2, p_lambda).value();
  rep.d_validity = expected_reward(pi2, fam.reward()) - expected_reward(pi, fam.reward());
  rep.d_kl_base =
      kl_divergence(pi2, fam.base()).value() - kl_divergence(pi, fam.base()).value();
  return rep;
}

std::optional<double> crossing_lambda(const TiltedFamily& fam, const FiniteDistribution& pi,
                                      const FiniteDistribution& pi2) {
  const double d_mu = expected_reward(pi, fam.reward()) - expected_reward(pi2, fam.reward());
  if (d_mu == 0.0) return std::nullopt;
  const double d_kl =
      kl_divergence(pi, fam.base()).value() - kl_divergence(pi2, fam.base()).value();
  return d_kl / d_mu;
}

std::vector<ConvergenceRecord> convergence_profile(const TiltedFamily& fam,
                                                   const std::vector<double>& lambdas) {
  if (!fam.is_binary()) {
    throw DomainError(
        "convergence_profile: reward is not binary; use attained_bound_limits for general rewards");
  }
  const double a1 = fam.valid_mass();
  const auto pstar = condition(fam.base(), fam.reward().argmax_set());
  std::vector<ConvergenceRecord> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    const auto p = tilted(fam, lambda);
    ConvergenceRecord rec;
    rec.lambda = lambda;
    rec.tvd_to_pstar = binary::tvd_to_filtered(a1, lambda);
    rec.fkl_from_pstar = binary::fkl_from_filtered(a1, lambda);
    rec.rkl_to_pstar = kl_divergence(p, pstar);
    rec.tvd_numeric = total_variation(pstar, p);
    rec.fkl_numeric = kl_divergence(pstar, p).value();
    out.push_back(rec);
  }
  return out;
}

BoundLimit attained_bound_limits(const TiltedFamily& fam, BoundDirection direction) {
  const bool upper = direction == BoundDirection::upper;
  auto set = upper ? fam.reward().argmax_set() : fam.reward().argmin_set();
  auto limit = condition(fam.base(), set);
  const double ceiling = -std::log(mass(fam.base(), set));
  return BoundLimit{direction, upper ? fam.max_reward() : fam.min_reward(), std::move(set),
                    std::move(limit), ceiling};
}

}  // namespace klgeo
