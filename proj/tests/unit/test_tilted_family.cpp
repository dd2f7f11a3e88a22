#include <cmath>
#include <vector>

#include "doctest.h"
#include "klgeo/experiments.hpp"
#include "klgeo/rng.hpp"
#include "klgeo/tilted_family.hpp"

using namespace klgeo;

namespace {

// Tilted distribution computed directly, no log-sum-exp.
std::vector<double> naive_tilt(const std::vector<double>& a, const std::vector<double>& r,
                               double lambda) {
  std::vector<double> w(a.size());
  double z = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) z += w[i] = a[i] * std::exp(lambda * r[i]);
  for (double& x : w) x /= z;
  return w;
}

TiltedFamily random_reward_family(std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  std::vector<double> a(n), r(n);
  double s = 0.0;
  for (auto& x : a) s += x = 0.1 + rng.uniform();
  for (auto& x : a) x /= s;
  for (auto& x : r) x = 2.0 * rng.uniform() - 1.0;
  return TiltedFamily(FiniteDistribution(a), RewardFn(r));
}

}  // namespace

TEST_CASE("binary closed forms agree with the enumerated family") {
  for (double a1 : {0.1, 0.35, 0.9}) {
    TiltedFamily fam = binary_family(a1);
    for (double lambda : {-3.0, 0.0, 0.7, 4.0, 12.0}) {
      CHECK(binary::log_partition(a1, lambda) ==
            doctest::Approx(log_partition(fam, lambda)).epsilon(1e-12));
      CHECK(binary::moment(a1, lambda) == doctest::Approx(moment(fam, lambda)).epsilon(1e-12));
      const double mu = binary::moment(a1, lambda);
      CHECK(binary::natural_param(a1, mu) == doctest::Approx(lambda).epsilon(1e-9));
    }
  }
}

TEST_CASE("tilted distribution matches a direct computation") {
  std::vector<double> a = {0.2, 0.3, 0.5};
  std::vector<double> r = {0.0, 1.0, 0.5};
  TiltedFamily fam{FiniteDistribution(a), RewardFn(r)};
  auto expect = naive_tilt(a, r, 2.5);
  FiniteDistribution p = tilted(fam, 2.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("moment map is increasing and A is convex on a general reward") {
  TiltedFamily fam = random_reward_family(7, 27);
  double prev = -1e300;
  std::vector<double> a_vals;
  for (int i = -40; i <= 40; ++i) {
    const double lambda = 0.5 * i;
    const double mu = moment(fam, lambda);
    CHECK(mu > prev);
    prev = mu;
    a_vals.push_back(log_partition(fam, lambda));
  }
  for (std::size_t i = 1; i + 1 < a_vals.size(); ++i)
    CHECK(a_vals[i - 1] - 2 * a_vals[i] + a_vals[i + 1] >= -1e-10);
}

TEST_CASE("moment coordinate round trip stays tight at large lambda") {
  TiltedFamily fam = binary_family(0.35);
  for (double lambda : {-20.0, -5.0, 0.0, 5.0, 20.0}) {
    CHECK(natural_param(fam, moment_coordinate(fam, lambda)) ==
          doctest::Approx(lambda).epsilon(1e-12).scale(1.0));
  }
  TiltedFamily gen = random_reward_family(3, 10);
  for (double lambda : {-20.0, -1.0, 3.0, 20.0}) {
    CHECK(std::abs(natural_param(gen, moment_coordinate(gen, lambda)) - lambda) < 1e-10);
  }
}

TEST_CASE("natural_param rejects moments outside the open interval") {
  TiltedFamily fam = binary_family(0.5);
  CHECK_THROWS_AS(natural_param(fam, 1.0), DomainError);
  CHECK_THROWS_AS(natural_param(fam, 0.0), DomainError);
}

TEST_CASE("divergence cost equals KL to base") {
  TiltedFamily fam = random_reward_family(11, 8);
  for (double lambda : {-2.0, 0.5, 6.0}) {
    const double mu = moment(fam, lambda);
    CHECK(divergence_cost(fam, mu) ==
          doctest::Approx(kl_divergence(tilted(fam, lambda), fam.base()).value()).epsilon(1e-9));
  }
}

TEST_CASE("KL difference identity and J_beta decomposition") {
  TiltedFamily fam = random_reward_family(5, 6);
  FiniteDistribution q({0.1, 0.2, 0.3, 0.15, 0.15, 0.1});
  const double l1 = 0.5, l2 = 3.0;
  const double direct = kl_divergence(q, tilted(fam, l2)).value() -
                        kl_divergence(q, tilted(fam, l1)).value();
  CHECK(kl_difference(fam, q, l1, l2) == doctest::Approx(direct).epsilon(1e-10));
  const double beta = 0.25;
  const double rhs = beta * (log_partition(fam, 1 / beta) -
                             kl_divergence(q, tilted(fam, 1 / beta)).value());
  CHECK(j_beta(fam, q, beta) == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("binary convergence quantities") {
  const double a1 = 0.5;
  CHECK(binary::tvd_to_filtered(a1, 0.0) == doctest::Approx(0.5));
  CHECK(binary::fkl_from_filtered(a1, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(binary::tvd_to_filtered(a1, 40.0) < 1e-15);
  TiltedFamily fam = binary_family(0.2);
  auto profile = convergence_profile(fam, {0.0, 1.0, 5.0});
  for (const auto& row : profile) {
    CHECK(row.tvd_to_pstar == doctest::Approx(row.tvd_numeric).epsilon(1e-12));
    CHECK(row.fkl_from_pstar == doctest::Approx(row.fkl_numeric).epsilon(1e-12));
    CHECK(row.rkl_to_pstar.is_infinite());
  }
}

TEST_CASE("attained bound limit") {
  std::vector<double> a = {0.2, 0.3, 0.5};
  TiltedFamily fam(FiniteDistribution(a), RewardFn({1.0, 1.0, 0.0}));
  BoundLimit up = attained_bound_limits(fam, BoundDirection::upper);
  CHECK(up.bound_set == OutcomeSubset{0, 1});
  CHECK(up.kl_ceiling == doctest::Approx(-std::log(0.5)));
  BoundLimit lo = attained_bound_limits(fam, BoundDirection::lower);
  CHECK(lo.limit_dist[2] == doctest::Approx(1.0));
}
