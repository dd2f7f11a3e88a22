// One-parameter exponential family p_lambda(y) = a(y) exp(lambda r(y) - A(lambda))
// generated by a base distribution a and a bounded reward r.
//
// lambda is the public parameter throughout. The KL-control weight beta maps to
// lambda = 1/beta; beta = 0 (pure reward maximization) has no tilted
// distribution and is only meaningful for j_beta.
#pragma once

#include <optional>
#include <vector>

#include "klgeo/distribution.hpp"

namespace klgeo {

/// Closed forms for a binary reward, parametrized by the base validity
/// A1 = a(Y1) in (0, 1).
namespace binary {

double log_partition(double a1, double lambda);
double moment(double a1, double lambda);
double natural_param(double a1, double mu);
/// KL(Bernoulli(mu) || Bernoulli(a1)); mu may be 0 or 1.
double divergence_cost(double a1, double mu);
/// TVD(p*, p_lambda) = A0 / (A0 + A1 e^lambda).
double tvd_to_filtered(double a1, double lambda);
/// KL(p* || p_lambda) = log(1 + (A0/A1) e^-lambda).
double fkl_from_filtered(double a1, double lambda);

}  // namespace binary

class TiltedFamily {
 public:
  /// The base must have full support and the reward must be non-constant.
  TiltedFamily(FiniteDistribution base, RewardFn reward);
  TiltedFamily(FiniteDistribution base, const BinaryVerifier& verifier);

  const FiniteDistribution& base() const { return base_; }
  const RewardFn& reward() const { return reward_; }
  double min_reward() const { return reward_.min(); }
  double max_reward() const { return reward_.max(); }

  bool is_binary() const { return valid_mass_.has_value(); }
  /// A1 = a(Y1). Throws DomainError for non-binary rewards.
  double valid_mass() const;
  double invalid_mass() const { return 1.0 - valid_mass(); }

 private:
  FiniteDistribution base_;
  RewardFn reward_;
  std::optional<double> valid_mass_;
};

/// A point on the family: natural parameter, moment, KL cost and log-partition.
struct GeometryPoint {
  double lambda = 0.0;
  double mu = 0.0;
  double kappa = 0.0;
  double log_z = 0.0;
};

/// Differences between two candidates pi (first) and pi2 (second).
struct ComparisonReport {
  double d_j = 0.0;          ///< J_beta(pi2) - J_beta(pi)
  double d_kl_tilted = 0.0;  ///< KL(pi, p_lambda) - KL(pi2, p_lambda)
  double d_validity = 0.0;   ///< mu(pi2) - mu(pi)
  double d_kl_base = 0.0;    ///< KL(pi2, a) - KL(pi, a)
};

double log_partition(const TiltedFamily& fam, double lambda);
FiniteDistribution tilted(const TiltedFamily& fam, double lambda);

/// A'(lambda) = E_{p_lambda} r.
double moment(const TiltedFamily& fam, double lambda);
/// A''(lambda) = Var_{p_lambda} r.
double moment_variance(const TiltedFamily& fam, double lambda);

/// Inverse of the moment map. Closed form for binary rewards, root-finding
/// otherwise. Throws DomainError unless min_reward < mu < max_reward.
double natural_param(const TiltedFamily& fam, double mu);
/// Root-finding inverse regardless of reward type.
double natural_param_numeric(const TiltedFamily& fam, double mu);

/// A moment together with its distances to the reward bounds, each computed
/// directly so that neither loses precision near its bound.
struct MomentCoordinate {
  double mu = 0.0;
  double gap_upper = 0.0;  ///< M - mu
  double gap_lower = 0.0;  ///< mu - m
};

MomentCoordinate moment_coordinate(const TiltedFamily& fam, double lambda);
/// Inverse of moment_coordinate; accurate near either bound.
double natural_param(const TiltedFamily& fam, const MomentCoordinate& coordinate);

/// kappa(mu) = KL(p_{lambda(mu)} || a), the Legendre dual of A. At an attained
/// bound (mu equal to the reward's min or max) returns -log a(Y_bound).
double divergence_cost(const TiltedFamily& fam, double mu);

GeometryPoint geometry_point(const TiltedFamily& fam, double lambda);

/// KL(q, p_l2) - KL(q, p_l1) through log-partition values only.
double kl_difference(const TiltedFamily& fam, const FiniteDistribution& q, double l1, double l2);

/// E_q r - beta KL(q || a). beta = 0 is the pure expected-reward objective.
double j_beta(const TiltedFamily& fam, const FiniteDistribution& q, double beta);

ComparisonReport compare(const TiltedFamily& fam, const FiniteDistribution& pi,
                         const FiniteDistribution& pi2, double beta);

/// lambda at which KL(pi, p_lambda) = KL(pi2, p_lambda), from
/// [KL(pi,a) - KL(pi2,a)] / [mu(pi) - mu(pi2)]. Empty when validities tie.
std::optional<double> crossing_lambda(const TiltedFamily& fam, const FiniteDistribution& pi,
                                      const FiniteDistribution& pi2);

struct ConvergenceRecord {
  double lambda = 0.0;
  double tvd_to_pstar = 0.0;      ///< closed form
  double fkl_from_pstar = 0.0;    ///< closed form
  ExtendedReal rkl_to_pstar = ExtendedReal::infinity();
  double tvd_numeric = 0.0;       ///< recomputed from the distributions
  double fkl_numeric = 0.0;
};

/// Distance of p_lambda to the filtered model p* = a(. | Y1) along a lambda
/// grid. Binary rewards only; general rewards use attained_bound_limits.
std::vector<ConvergenceRecord> convergence_profile(const TiltedFamily& fam,
                                                   const std::vector<double>& lambdas);

enum class BoundDirection { upper, lower };

struct BoundLimit {
  BoundDirection direction = BoundDirection::upper;
  double bound = 0.0;                ///< M or m
  OutcomeSubset bound_set;           ///< Y_M or Y_m
  FiniteDistribution limit_dist;     ///< a(. | bound_set)
  double kl_ceiling = 0.0;           ///< -log a(bound_set)
};

/// Limit of p_lambda as lambda -> +inf (upper) or -inf (lower).
BoundLimit attained_bound_limits(const TiltedFamily& fam, BoundDirection direction);

}  // namespace klgeo
