#include "klgeo/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

#include "klgeo/config.hpp"
#include "klgeo/experiments.hpp"
#include "klgeo/format.hpp"
#include "klgeo/optimizer.hpp"
#include "klgeo/rng.hpp"

namespace klgeo {

namespace {

// Absolute error for |expected| <= 1, relative above.
double scaled_error(double got, double expected) {
  return std::abs(got - expected) / std::max(1.0, std::abs(expected));
}

struct Tracker {
  double worst = 0.0;
  std::string where;
  void add(double err, const std::string& at) {
    if (!(err <= worst)) {  // NaN also lands here
      worst = err;
      where = at;
    }
  }
  CheckResult result(double tol) const {
    CheckResult r;
    r.passed = worst <= tol;
    r.max_error = worst;
    r.tolerance = tol;
    if (!where.empty()) r.detail = "worst at " + where;
    return r;
  }
};

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= n; ++i) g.push_back(lo + step * static_cast<double>(i));
  return g;
}

const std::vector<double> kBinaryA1 = {0.1, 0.35, 0.5, 0.9};

TiltedFamily random_reward_family(std::uint64_t seed, std::size_t n = 27) {
  SeededRng rng(derive_seed(seed, 0x27));
  std::vector<double> a(n);
  std::vector<double> r(n);
  double total = 0.0;
  for (auto& x : a) total += (x = 0.05 + rng.uniform());
  for (auto& x : a) x /= total;
  for (auto& x : r) x = rng.uniform();
  return TiltedFamily(FiniteDistribution(std::move(a)), RewardFn(std::move(r)));
}

FiniteDistribution random_distribution(SeededRng& rng, std::size_t n, bool allow_zeros) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = rng.uniform();
    if (allow_zeros && rng.uniform() < 0.2) x = 0.0;
    total += x;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    total = 1.0;
  }
  for (auto& x : p) x /= total;
  return FiniteDistribution(std::move(p));
}

std::string at_lambda(const std::string& what, double lambda) {
  return what + " lambda=" + format_double(lambda);
}

CheckResult closed_form_convergence(const CheckContext&, double tol) {
  Tracker t;
  bool rkl_ok = true;
  const auto lambdas = grid(-10.0, 40.0, 0.5);
  for (double a1 : kBinaryA1) {
    const double a0 = 1.0 - a1;
    const auto profile = convergence_profile(binary_family(a1), lambdas);
    for (const auto& rec : profile) {
      const std::string at = "A1=" + format_double(a1) + at_lambda("", rec.lambda);
      const double tvd = a0 / (a0 + a1 * std::exp(rec.lambda));
      const double fkl = std::log1p((a0 / a1) * std::exp(-rec.lambda));
      t.add(scaled_error(rec.tvd_numeric, tvd), at);
      t.add(scaled_error(rec.fkl_numeric, fkl), at);
      t.add(scaled_error(rec.tvd_to_pstar, tvd), at);
      t.add(scaled_error(rec.fkl_from_pstar, fkl), at);
      if (!rec.rkl_to_pstar.is_infinite()) rkl_ok = false;
    }
  }
  auto r = t.result(tol);
  if (!rkl_ok) {
    r.passed = false;
    r.detail = "reverse KL finite at some grid point";
  }
  return r;
}

std::vector<std::pair<std::string, TiltedFamily>> bijection_families(std::uint64_t seed) {
  std::vector<std::pair<std::string, TiltedFamily>> out;
  for (double a1 : kBinaryA1) out.emplace_back("binary A1=" + format_double(a1), binary_family(a1));
  out.emplace_back("random 27-point reward", random_reward_family(seed));
  return out;
}

CheckResult bijection_roundtrip(const CheckContext& ctx, double tol) {
  Tracker t;
  for (const auto& [name, fam] : bijection_families(ctx.seed)) {
    for (double lambda : grid(-20.0, 20.0, 0.25)) {
      const double back = ctx.natural_param(fam, moment_coordinate(fam, lambda));
      t.add(std::abs(back - lambda), at_lambda(name, lambda));
    }
  }
  return t.result(tol);
}

CheckResult legendre_dual(const CheckContext& ctx, double tol) {
  Tracker t;
  for (const auto& [name, fam] : bijection_families(ctx.seed)) {
    for (double lambda : grid(-20.0, 20.0, 0.5)) {
      const double mu = moment(fam, lambda);
      if (!(mu > fam.min_reward() && mu < fam.max_reward())) continue;
      const double kappa = divergence_cost(fam, mu);
      const double kl = kl_divergence(tilted(fam, lambda), fam.base()).value();
      t.add(scaled_error(kappa, kl), at_lambda(name, lambda));
    }
  }
  return t.result(tol);
}

CheckResult convexity_monotonicity(const CheckContext& ctx, double tol) {
  Tracker t;
  std::string violation;
  for (const auto& [name, fam] : bijection_families(ctx.seed)) {
    const auto g = grid(-20.0, 20.0, 0.25);
    std::vector<double> a;
    std::vector<double> m;
    for (double l : g) {
      a.push_back(log_partition(fam, l));
      m.push_back(moment(fam, l));
    }
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      // Second difference scaled by the step; negative values measure non-convexity.
      const double second = a[i + 1] - 2.0 * a[i] + a[i - 1];
      t.add(std::max(0.0, -second), at_lambda(name + " convexity", g[i]));
    }
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(m[i] >= m[i - 1])) {
        t.add(m[i - 1] - m[i], at_lambda(name + " moment decreases", g[i]));
        violation = name;
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(moment_variance(fam, g[i]) >= 0.0)) violation = name;
    }
  }
  auto r = t.result(tol);
  if (!violation.empty()) {
    r.passed = false;
    r.detail = "moment map not monotone for " + violation;
  }
  return r;
}

CheckResult j_beta_identity(const CheckContext& ctx, double tol) {
  Tracker t;
  SeededRng rng(derive_seed(ctx.seed, 0x1a));
  const auto fam = random_reward_family(ctx.seed);
  const auto bin = binary_family(0.3);
  for (int i = 0; i < 100; ++i) {
    const auto& f = i % 2 == 0 ? fam : bin;
    const auto q = random_distribution(rng, f.base().size(), true);
    const double beta = 0.02 + 5.0 * rng.uniform();
    const double lambda = 1.0 / beta;
    const double lhs = j_beta(f, q, beta);
    const double rhs =
        beta * (log_partition(f, lambda) - kl_divergence(q, tilted(f, lambda)).value());
    t.add(scaled_error(lhs, rhs), "tuple " + std::to_string(i));
  }
  return t.result(tol);
}

CheckResult kl_difference_identity(const CheckContext& ctx, double tol) {
  Tracker t;
  SeededRng rng(derive_seed(ctx.seed, 0x9));
  const auto fam = random_reward_family(ctx.seed);
  const auto bin = binary_family(0.3);
  for (int i = 0; i < 100; ++i) {
    const auto& f = i % 2 == 0 ? fam : bin;
    const auto q = random_distribution(rng, f.base().size(), true);
    const double l1 = -10.0 + 30.0 * rng.uniform();
    const double l2 = -10.0 + 30.0 * rng.uniform();
    const double direct = kl_divergence(q, tilted(f, l2)).value() -
                          kl_divergence(q, tilted(f, l1)).value();
    const double mu_q = expected_reward(q, f.reward());
    const double formula = log_partition(f, l2) - log_partition(f, l1) + mu_q * (l1 - l2);
    t.add(scaled_error(direct, formula), "tuple " + std::to_string(i));
    t.add(scaled_error(kl_difference(f, q, l1, l2), formula), "tuple " + std::to_string(i));
  }
  return t.result(tol);
}

CheckResult beta_mu_consistency(const CheckContext&, double tol) {
  Tracker t;
  const auto rows = beta_mu_table({0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95}, {0.1, 0.5, 0.9, 0.99});
  for (const auto& row : rows) {
    const std::string at = "A1=" + format_double(row.a1) + " mu=" + format_double(row.mu_target);
    t.add(scaled_error(binary::moment(row.a1, row.lambda_required), row.mu_target), at);
    const auto fam = binary_family(row.a1);
    const double kl = kl_divergence(tilted(fam, row.lambda_required), fam.base()).value();
    t.add(scaled_error(row.kappa_cost, kl), at);
    t.add(scaled_error(row.kappa_cost, divergence_cost(fam, row.mu_target)), at);
  }
  return t.result(tol);
}

CheckResult beta_mu_reference_values(const CheckContext&, double tol) {
  const auto rows = beta_mu_table({0.1, 0.5, 0.9}, {0.9});
  const double lambdas[] = {4.39, 2.20, 0.0};
  const double betas[] = {0.23, 0.45};
  Tracker t;
  for (std::size_t i = 0; i < 3; ++i) {
    t.add(std::abs(rows[i].lambda_required - lambdas[i]), "lambda row " + std::to_string(i));
    if (i < 2) {
      if (!rows[i].beta_required.is_finite()) {
        t.add(std::numeric_limits<double>::infinity(), "beta row " + std::to_string(i));
      } else {
        t.add(std::abs(rows[i].beta_required.value() - betas[i]), "beta row " + std::to_string(i));
      }
    }
  }
  auto r = t.result(tol);
  if (!rows[2].beta_required.is_infinite()) {
    r.passed = false;
    r.detail = "beta at A1=0.9 should be infinite";
  }
  return r;
}

CheckResult ordering_instance(const CheckContext&, double tol) {
  const auto lambdas = grid(0.0, 60.0, 0.25);
  const auto ill = ordering_illustration(lambdas);
  Tracker t;
  t.add(std::abs(ill.candidates[2].validity - 0.93), "mu(pi3)");
  t.add(std::abs(ill.candidates[3].validity - 0.98), "mu(pi4)");
  t.add(std::abs(ill.crossing_lambda - ill.crossing_lambda_numeric), "crossing");
  auto r = t.result(tol);
  if (!std::isfinite(ill.crossing_lambda) || ill.crossing_lambda <= 0.0) {
    r.passed = false;
    r.detail = "no finite positive crossing";
    return r;
  }
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (lambdas[j] > ill.crossing_lambda && !(ill.curves[3][j] < ill.curves[2][j])) {
      r.passed = false;
      r.detail = at_lambda("pi4 not preferred above the crossing", lambdas[j]);
    }
  }
  if (r.passed) r.detail = "crossing lambda* = " + format_double(ill.crossing_lambda);
  return r;
}

CheckResult ordering_curves_identity(const CheckContext&, double tol) {
  const auto lambdas = grid(-5.0, 30.0, 1.0);
  const auto ill = ordering_illustration(lambdas);
  Tracker t;
  for (std::size_t i = 0; i < ill.candidates.size(); ++i) {
    const double mu = ill.candidates[i].validity;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      for (std::size_t k = 0; k < lambdas.size(); k += 5) {
        const double lhs = ill.curves[i][j] - ill.curves[i][k];
        const double rhs = log_partition(ill.family, lambdas[j]) -
                           log_partition(ill.family, lambdas[k]) + mu * (lambdas[k] - lambdas[j]);
        t.add(scaled_error(lhs, rhs), ill.candidates[i].name);
      }
    }
  }
  return t.result(tol);
}

NGramPolicy random_bigram(const SequenceSpace& space, std::uint64_t seed) {
  auto pol = NGramPolicy::bigram(space);
  SeededRng rng(seed);
  for (double& l : pol.logits()) l = rng.gaussian(0.0, 1.0);
  return pol;
}

CheckResult gradient_check(const CheckContext& ctx, double tol, bool j_beta_objective) {
  Tracker t;
  for (std::size_t i = 0; i < ctx.gradcheck_policies; ++i) {
    const auto inst = make_toy_instance(derive_seed(ctx.seed, 100 + i), SweepConfig{});
    const auto pol = random_bigram(inst.space, derive_seed(ctx.seed, 200 + i));
    if (j_beta_objective) {
      for (double lambda : {0.5, 5.0, 50.0}) {
        const auto g = verify_gradients(pol, JBetaObjective{inst.family, 1.0 / lambda},
                                        ctx.gradcheck_h);
        t.add(g.max_relative_error, "policy " + std::to_string(i) + at_lambda("", lambda) +
                                        " param " + std::to_string(g.worst_index));
      }
    } else {
      const auto g = verify_gradients(pol, ForwardKlObjective{inst.pstar}, ctx.gradcheck_h);
      t.add(g.max_relative_error,
            "policy " + std::to_string(i) + " param " + std::to_string(g.worst_index));
    }
  }
  return t.result(tol);
}

CheckResult sweep_record_identity(const CheckContext& ctx, double tol) {
  const auto inst = make_toy_instance(ctx.seed, SweepConfig{});
  const auto start = NGramPolicy::from_distribution(inst.space, bigram_context_lengths(3), inst.base);
  OptimizerConfig cfg = OptimizerConfig::j_beta_defaults();
  cfg.steps = 200;
  Tracker t;
  for (double lambda : {0.5, 5.0, 50.0}) {
    const auto run = ascend_j_beta(inst.family, lambda, start, cfg);
    const auto rec = make_record(inst, lambda, run, StartKind::cold, 5);
    const double rhs = rec.beta * (rec.log_partition - rec.rkl_to_tilted.value());
    t.add(scaled_error(rec.j_beta_value, rhs), at_lambda("", lambda));
    if (!(rec.validity >= 0.0 && rec.validity <= 1.0)) t.add(1.0, at_lambda("validity", lambda));
    for (std::size_t k = 1; k < rec.top_sequences.size(); ++k) {
      if (rec.top_sequences[k].probability > rec.top_sequences[k - 1].probability) {
        t.add(1.0, at_lambda("top sequences unsorted", lambda));
      }
    }
  }
  return t.result(tol);
}

CheckResult divergence_axioms(const CheckContext& ctx, double tol) {
  SeededRng rng(derive_seed(ctx.seed, 0xd1));
  Tracker t;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_distribution(rng, 9, true);
    const auto q = random_distribution(rng, 9, false);
    const auto kl = kl_divergence(p, q);
    if (!kl.is_finite() || kl.value() < 0.0) t.add(1.0, "KL(p,q) with full-support q");
    t.add(kl_divergence(p, p).value(), "KL(p,p)");
    const double tv = total_variation(p, q);
    if (tv < 0.0 || tv > 1.0) t.add(1.0, "TVD range");
    t.add(std::abs(tv - total_variation(q, p)), "TVD symmetry");
    // Pinsker: TVD <= sqrt(KL / 2).
    t.add(std::max(0.0, tv - std::sqrt(kl.value() / 2.0)), "Pinsker");
  }
  return t.result(tol);
}

CheckResult a1_estimate(const CheckContext& ctx, double tol) {
  const auto inst = make_toy_instance(ctx.seed, SweepConfig{});
  SeededRng rng(derive_seed(ctx.seed, 0xa1));
  const auto est = estimate_a1(inst.verifier, inst.base, 1'000'000, rng);
  CheckResult r;
  r.max_error = std::abs(est.estimate - est.exact) / est.standard_error;
  r.tolerance = tol;
  r.passed = r.max_error <= tol;
  r.detail = "error in standard errors; estimate " + format_double(est.estimate) + " vs " +
             format_double(est.exact);
  return r;
}

CheckResult number_roundtrip(const CheckContext& ctx, double) {
  SeededRng rng(derive_seed(ctx.seed, 0xf));
  std::size_t bad = 0;
  std::vector<double> values = {0.0, -0.0, 1.0, 0.1, 1e-300, 5e-324, 1.7976931348623157e308,
                                std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 2000; ++i) {
    values.push_back((rng.uniform() - 0.5) * std::pow(10.0, 40.0 * rng.uniform() - 20.0));
  }
  for (double v : values) {
    const double back = parse_double(format_double(v));
    if (std::memcmp(&back, &v, sizeof v) != 0) ++bad;
  }
  CheckResult r;
  r.passed = bad == 0;
  r.max_error = static_cast<double>(bad);
  r.detail = std::to_string(bad) + " of " + std::to_string(values.size()) + " values changed";
  return r;
}

CheckResult config_roundtrip(const CheckContext& ctx, double) {
  RunConfig a;
  RunConfig b;
  b.seeds = {ctx.seed, 7, 9};
  b.lambdas = {0.1, 1.0 / 3.0, 50};
  b.order = FamilyOrder::full;
  b.warm_start = true;
  b.tolerance = 1e-9;
  b.tvd.decay_every = 0;
  b.sigma = 0.1 + 0.2;
  bool ok = true;
  for (const auto& cfg : {a, b}) ok = ok && parse_config(serialize_config(cfg)) == cfg;
  CheckResult r;
  r.passed = ok;
  r.max_error = ok ? 0.0 : 1.0;
  r.detail = ok ? "" : "parse(serialize(config)) differs";
  return r;
}

}  // namespace

const std::vector<CheckSpec>& check_registry() {
  static const std::vector<CheckSpec> registry = {
      {"closed-form-convergence", "binary TVD / forward KL to p* match closed forms; reverse KL infinite",
       1e-12, closed_form_convergence},
      {"bijection-roundtrip", "lambda(mu(lambda)) = lambda on [-20, 20]", 1e-10, bijection_roundtrip},
      {"legendre-dual", "kappa(mu(lambda)) = KL(p_lambda || a)", 1e-10, legendre_dual},
      {"log-partition-convexity", "A convex and mu increasing on the grid", 1e-12,
       convexity_monotonicity},
      {"j-beta-identity", "J_beta(q) = beta [A(1/beta) - KL(q || p_{1/beta})]", 1e-10,
       j_beta_identity},
      {"kl-difference-identity", "KL(q,p_l2) - KL(q,p_l1) = A(l2) - A(l1) + mu_q (l1 - l2)", 1e-10,
       kl_difference_identity},
      {"beta-mu-consistency", "beta/mu table rows invert the moment map and match kappa", 1e-10,
       beta_mu_consistency},
      {"beta-mu-reference", "lambda 4.39 / 2.20 / 0 and beta 0.23 / 0.45 / inf at mu = 0.9", 0.05,
       beta_mu_reference_values},
      {"ordering-instance", "validities 0.93 / 0.98, finite crossing, pi4 preferred above it", 1e-6,
       ordering_instance},
      {"ordering-curves-identity", "KL curve differences follow the log-partition identity", 1e-10,
       ordering_curves_identity},
      {"gradient-j-beta", "analytic vs central-difference gradient of J_beta", 1e-7,
       [](const CheckContext& c, double tol) { return gradient_check(c, tol, true); }},
      {"gradient-forward-kl", "analytic vs central-difference gradient of the forward KL", 1e-7,
       [](const CheckContext& c, double tol) { return gradient_check(c, tol, false); }},
      {"sweep-record-identity", "records satisfy j_beta = beta (A - KL(pi || p_lambda))", 1e-9,
       sweep_record_identity},
      {"divergence-axioms", "KL >= 0, KL(p,p) = 0, TVD symmetric in [0,1], Pinsker", 1e-12,
       divergence_axioms},
      {"a1-estimate", "Monte Carlo A1 within 4 standard errors of the exact value", 4.0, a1_estimate},
      {"number-roundtrip", "17-digit decimal output parses back bit for bit", 0.0, number_roundtrip},
      {"config-roundtrip", "parse(serialize(config)) = config", 0.0, config_roundtrip},
  };
  return registry;
}

std::vector<CheckResult> run_checks(const CheckContext& ctx, const std::string& prefix) {
  std::vector<CheckResult> out;
  for (const auto& spec : check_registry()) {
    if (spec.name.rfind(prefix, 0) != 0) continue;
    // Exact checks (tolerance 0) are not affected by the override.
    const double tol =
        ctx.tolerance && spec.default_tolerance > 0.0 ? *ctx.tolerance : spec.default_tolerance;
    CheckResult r;
    try {
      r = spec.run(ctx, tol);
    } catch (const std::exception& e) {
      r.passed = false;
      r.tolerance = tol;
      r.max_error = std::numeric_limits<double>::infinity();
      r.detail = std::string("exception: ") + e.what();
    }
    r.name = spec.name;
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_check_table(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-26s %-5s %-24s %-24s %s\n", "check", "state", "max_error",
                "tolerance", "detail");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-26s %-5s %-24s %-24s %s\n", r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", format_double(r.max_error).c_str(),
                  format_double(r.tolerance).c_str(), r.detail.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace klgeo
