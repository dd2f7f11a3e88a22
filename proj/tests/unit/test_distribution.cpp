#include <cmath>
#include <limits>

#include "doctest.h"
#include "klgeo/distribution.hpp"
#include "klgeo/format.hpp"

using namespace klgeo;

TEST_CASE("format_double round-trips bitwise") {
  const double values[] = {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308,
                           -2.5e-17, 123456789.123456789};
  for (double v : values) {
    const double back = parse_double(format_double(v));
    CHECK(std::signbit(back) == std::signbit(v));
    CHECK(back == v);
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(parse_double("inf")));
  CHECK_THROWS(parse_double("1.0abc"));
}

TEST_CASE("FiniteDistribution validation") {
  CHECK_THROWS_AS(FiniteDistribution({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(FiniteDistribution({-0.1, 1.1}), DomainError);
  CHECK_THROWS(FiniteDistribution(std::vector<double>{}));
  FiniteDistribution u = FiniteDistribution::uniform(4);
  CHECK(u[2] == doctest::Approx(0.25));
  FiniteDistribution d = FiniteDistribution::dirac(3, 1);
  CHECK(d[1] == 1.0);
  CHECK(support(d) == OutcomeSubset{1});
}

TEST_CASE("KL divergence and TVD against hand values") {
  FiniteDistribution p({0.5, 0.5});
  FiniteDistribution q({0.25, 0.75});
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_divergence(p, q).value() == doctest::Approx(expected).epsilon(1e-14));
  CHECK(total_variation(p, q) == doctest::Approx(0.25));
  CHECK(kl_divergence(p, p).value() == 0.0);

  FiniteDistribution r({1.0, 0.0});
  CHECK(kl_divergence(p, r).is_infinite());
  CHECK(kl_divergence(r, p).value() == doctest::Approx(std::log(2.0)));
  CHECK(entropy(p) == doctest::Approx(std::log(2.0)));
  CHECK(entropy(r) == 0.0);
}

TEST_CASE("space mismatch is a structural error") {
  FiniteDistribution p = FiniteDistribution::uniform(2);
  FiniteDistribution q = FiniteDistribution::uniform(3);
  CHECK_THROWS_AS(kl_divergence(p, q), StructuralError);
  CHECK_THROWS_AS(total_variation(p, q), StructuralError);
}

TEST_CASE("conditioning and mass") {
  FiniteDistribution p({0.1, 0.2, 0.3, 0.4});
  FiniteDistribution c = condition(p, {1, 3});
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(1.0 / 3.0));
  CHECK(mass(p, {0, 2}) == doctest::Approx(0.4));
  FiniteDistribution z({0.0, 1.0});
  CHECK_THROWS_AS(condition(z, {0}), DomainError);
}

TEST_CASE("BinaryVerifier requires valid and invalid outcomes") {
  CHECK_THROWS(BinaryVerifier({true, true}));
  CHECK_THROWS(BinaryVerifier({false, false, true}));
  BinaryVerifier v({true, false, true});
  CHECK(v.valid_set() == OutcomeSubset{0, 2});
  CHECK(v.as_reward().is_binary());
  CHECK(expected_reward(FiniteDistribution({0.2, 0.3, 0.5}), v) == doctest::Approx(0.7));
}

TEST_CASE("ExtendedReal") {
  CHECK(ExtendedReal::infinity().to_string() == "inf");
  CHECK_THROWS_AS(ExtendedReal::infinity().value(), DomainError);
  CHECK(std::isinf(ExtendedReal::infinity().as_double()));
  CHECK(ExtendedReal::finite(0.5).value() == 0.5);
}
