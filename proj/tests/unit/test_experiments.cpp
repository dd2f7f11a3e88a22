#include <cmath>

#include "doctest.h"
#include "klgeo/experiments.hpp"
#include "klgeo/rng.hpp"

using namespace klgeo;

namespace {

SweepConfig quick_config() {
  SweepConfig cfg;
  cfg.ascent.steps = 100;
  cfg.compute_references = false;
  return cfg;
}

}  // namespace

TEST_CASE("family order parsing") {
  CHECK(parse_family_order("bigram") == FamilyOrder::bigram);
  CHECK(parse_family_order("full") == FamilyOrder::full);
  CHECK_THROWS_AS(parse_family_order("unigram"), DomainError);
  CHECK(to_string(FamilyOrder::full) == "full");
}

TEST_CASE("toy instance shape") {
  ToyInstance inst = make_toy_instance(1, SweepConfig{});
  CHECK(inst.space.size() == 27);
  CHECK(inst.verifier.valid_set().size() == 9);
  CHECK(inst.pstar.approx_equal(condition(inst.base, inst.verifier.valid_set()), 1e-15));
  ToyInstance again = make_toy_instance(1, SweepConfig{});
  CHECK(inst.base.approx_equal(again.base, 0.0));
}

TEST_CASE("top sequences ordering and ties") {
  FiniteDistribution d({0.25, 0.25, 0.5});
  auto top = top_sequences(d, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].index == 2);
  CHECK(top[1].index == 0);
  CHECK(top_sequences(d, 10).size() == 3);
  CHECK_THROWS_AS(top_sequences(d, 0), DomainError);
}

TEST_CASE("estimate_a1") {
  ToyInstance inst = make_toy_instance(2, SweepConfig{});
  SeededRng r1(42), r2(42);
  A1Estimate one = estimate_a1(inst.verifier, inst.base, 1, r1);
  CHECK((one.estimate == 0.0 || one.estimate == 1.0));
  A1Estimate e1 = estimate_a1(inst.verifier, inst.base, 5000, r1);
  A1Estimate e2 = estimate_a1(inst.verifier, inst.base, 1, r2);
  e2 = estimate_a1(inst.verifier, inst.base, 5000, r2);
  CHECK(e1.estimate == e2.estimate);
  CHECK(std::abs(e1.estimate - e1.exact) < 4 * e1.standard_error);
  CHECK_THROWS_AS(estimate_a1(inst.verifier, inst.base, 0, r1), DomainError);
}

TEST_CASE("beta/mu table") {
  auto rows = beta_mu_table({0.1, 0.5, 0.9}, {0.9});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].lambda_required == doctest::Approx(std::log(81.0)));
  CHECK(rows[0].beta_required.value() == doctest::Approx(1.0 / std::log(81.0)));
  CHECK(rows[1].lambda_required == doctest::Approx(std::log(9.0)));
  CHECK(rows[2].lambda_required == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[2].beta_required.is_infinite());
  for (const auto& row : rows)
    CHECK(binary::moment(row.a1, row.lambda_required) == doctest::Approx(row.mu_target));
}

TEST_CASE("ordering illustration") {
  OrderingIllustration ill = ordering_illustration({0, 1, 10, 20, 30});
  REQUIRE(ill.candidates.size() >= 2);
  CHECK(std::isfinite(ill.crossing_lambda));
  CHECK(ill.crossing_lambda_numeric == doctest::Approx(ill.crossing_lambda).epsilon(1e-9));
}

TEST_CASE("sweep records satisfy the J_beta decomposition") {
  SweepConfig cfg = quick_config();
  SeedSummary s = run_sweep(3, FamilyOrder::bigram, {1.0, 5.0}, cfg);
  REQUIRE(s.records.size() == 2);
  for (const auto& rec : s.records) {
    CHECK(rec.beta == doctest::Approx(1.0 / rec.lambda));
    CHECK(rec.j_beta_value ==
          doctest::Approx(rec.beta * (rec.log_partition - rec.rkl_to_tilted.value()))
              .epsilon(1e-9));
    CHECK(rec.top_sequences.size() == cfg.top_k);
  }
  CHECK_THROWS_AS(run_sweep(3, FamilyOrder::bigram, {5.0, 1.0}, cfg), DomainError);
  CHECK_THROWS_AS(run_sweep(3, FamilyOrder::bigram, {}, cfg), DomainError);
}

TEST_CASE("warm start adds warm records") {
  SweepConfig cfg = quick_config();
  cfg.warm_start = true;
  SeedSummary s = run_sweep(1, FamilyOrder::full, {5.0, 10.0}, cfg);
  CHECK(s.find(10.0, StartKind::warm) != nullptr);
  CHECK(s.find(10.0, StartKind::cold) != nullptr);
}

TEST_CASE("multi_seed needs at least two seeds") {
  SweepConfig cfg = quick_config();
  CHECK_THROWS_AS(multi_seed({1}, FamilyOrder::bigram, {1.0}, cfg), DomainError);
  MultiSeedSummary m = multi_seed({1, 2}, FamilyOrder::bigram, {1.0}, cfg);
  REQUIRE(m.per_lambda.size() == 1);
  const double v1 = m.seeds[0].records[0].validity, v2 = m.seeds[1].records[0].validity;
  CHECK(m.per_lambda[0].validity.mean == doctest::Approx((v1 + v2) / 2));
  CHECK(m.per_lambda[0].validity.stddev == doctest::Approx(std::abs(v1 - v2) / std::sqrt(2.0)));
}

TEST_CASE("summarize") {
  MetricStats s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.stddev == doctest::Approx(1.0));
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);
}

TEST_CASE("TVD-dip diagnostic") {
  SeedSummary s;
  s.labels.resize(27);
  auto add = [&](double lambda, double tvd, double fkl) {
    SweepRecord r;
    r.lambda = lambda;
    r.tvd_to_pstar = tvd;
    r.fkl_from_pstar = ExtendedReal::finite(fkl);
    s.records.push_back(r);
  };
  SUBCASE("coarse grid is rejected") {
    add(5.0, 0.5, 1.0);
    CHECK_THROWS_AS(tvd_dip_diagnostic(s), DomainError);
  }
  SUBCASE("dip detected") {
    const double grid[] = {0.5, 1, 2, 3, 5, 7, 10, 20};
    const double tvd[] = {0.6, 0.55, 0.45, 0.4, 0.5, 0.6, 0.7, 0.72};
    for (int i = 0; i < 8; ++i) add(grid[i], tvd[i], 1.0 + i);
    TvdDipReport r = tvd_dip_diagnostic(s);
    CHECK(r.dip_present);
    CHECK(r.argmin_lambda == 3.0);
    CHECK(r.fkl_monotone);
  }
  SUBCASE("monotone TVD has no dip") {
    const double grid[] = {0.5, 1, 2, 3, 5, 7, 10, 20};
    for (int i = 0; i < 8; ++i) add(grid[i], 0.4 + 0.01 * i, 2.0 - 0.1 * i);
    TvdDipReport r = tvd_dip_diagnostic(s);
    CHECK_FALSE(r.dip_present);
    CHECK_FALSE(r.fkl_monotone);
  }
}

TEST_CASE("geometry profile") {
  auto rows = geometry_profile({0.5}, {0.0, 2.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].tvd_pstar == doctest::Approx(0.5));
  CHECK(rows[1].mu == doctest::Approx(binary::moment(0.5, 2.0)));
}
