// End-to-end acceptance suite: one PASS/FAIL line per criterion, exit status
// non-zero when any criterion fails. Reference values are recomputed here from
// first principles rather than taken from the library under test.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "klgeo/experiments.hpp"
#include "klgeo/format.hpp"
#include "klgeo/optimizer.hpp"

using namespace klgeo;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= n; ++i) g.push_back(lo + step * static_cast<double>(i));
  return g;
}

double kl_plain(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

TiltedFamily random_reward_family(std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<double> a(27);
  std::vector<double> r(27);
  double total = 0.0;
  for (auto& x : a) total += (x = 0.05 + rng.uniform());
  for (auto& x : a) x /= total;
  for (auto& x : r) x = rng.uniform();
  return TiltedFamily(FiniteDistribution(a), RewardFn(r));
}

std::vector<double> random_simplex(SeededRng& rng, std::size_t n, bool zeros) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = (zeros && rng.uniform() < 0.2) ? 0.0 : rng.uniform();
    total += x;
  }
  if (total == 0.0) {
    p[0] = total = 1.0;
  }
  for (auto& x : p) x /= total;
  return p;
}

// ---------------------------------------------------------------- criteria

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  bool rkl_inf = true;
  for (double a1 : {0.1, 0.35, 0.5, 0.9}) {
    const double a0 = 1.0 - a1;
    const auto fam = binary_family(a1);
    const auto pstar = condition(fam.base(), {2, 3});
    for (double l : grid(-10.0, 40.0, 0.25)) {
      const auto p = tilted(fam, l);
      const double tvd_oracle = a0 / (a0 + a1 * std::exp(l));
      const double fkl_oracle = std::log1p((a0 / a1) * std::exp(-l));
      worst = std::max(worst, std::abs(total_variation(pstar, p) - tvd_oracle) /
                                  std::max(1.0, tvd_oracle));
      worst = std::max(worst, std::abs(kl_divergence(pstar, p).value() - fkl_oracle) /
                                  std::max(1.0, fkl_oracle));
      if (!kl_divergence(p, pstar).is_infinite()) rkl_inf = false;
    }
  }
  o.require(worst <= 1e-12, "closed-form mismatch " + fmt(worst));
  o.require(rkl_inf, "KL(p_lambda, p*) finite somewhere");
  o.detail = o.pass ? "max error " + fmt(worst) : o.detail;
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::vector<std::pair<std::string, TiltedFamily>> fams;
  for (double a1 : {0.1, 0.35, 0.5, 0.9}) fams.emplace_back("binary", binary_family(a1));
  fams.emplace_back("27-point", random_reward_family(2718));
  double rt = 0.0;
  double dual = 0.0;
  for (const auto& [name, fam] : fams) {
    const auto g = grid(-20.0, 20.0, 0.25);
    std::vector<double> a;
    std::vector<double> m;
    for (double l : g) {
      rt = std::max(rt, std::abs(natural_param(fam, moment_coordinate(fam, l)) - l));
      const double mu = moment(fam, l);
      const double kappa = divergence_cost(fam, mu);
      const double kl =
          kl_plain(tilted(fam, natural_param(fam, mu)).probs(), fam.base().probs());
      dual = std::max(dual, std::abs(kappa - kl) / std::max(1.0, kl));
      a.push_back(log_partition(fam, l));
      m.push_back(mu);
    }
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      if (a[i + 1] - 2.0 * a[i] + a[i - 1] < -1e-12) o.require(false, name + " A not convex");
    }
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(m[i] > m[i - 1])) o.require(false, name + " moment not increasing");
    }
  }
  o.require(rt <= 1e-10, "round trip error " + fmt(rt));
  o.require(dual <= 1e-10, "Legendre dual error " + fmt(dual));
  if (o.pass) o.detail = "round trip " + fmt(rt) + ", dual " + fmt(dual);
  return o;
}

Outcome criterion3() {
  Outcome o;
  SeededRng rng(31415);
  const auto general = random_reward_family(99);
  const auto bin = binary_family(0.3);
  double e1 = 0.0;
  double e2 = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto& fam = i % 2 ? bin : general;
    const auto q = random_simplex(rng, fam.base().size(), true);
    const FiniteDistribution qd(q);
    const double beta = 0.02 + 5.0 * rng.uniform();
    const double l1 = -10.0 + 30.0 * rng.uniform();
    const double l2 = -10.0 + 30.0 * rng.uniform();
    const auto r = fam.reward().values();
    const auto a = fam.base().probs();
    // J_beta from its definition.
    double reward = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) reward += q[k] * r[k];
    const double j_def = reward - beta * kl_plain(q, a);
    const double lam = 1.0 / beta;
    const double j_id = beta * (log_partition(fam, lam) - kl_plain(q, tilted(fam, lam).probs()));
    e1 = std::max(e1, std::abs(j_def - j_id) / std::max(1.0, std::abs(j_def)));
    e1 = std::max(e1, std::abs(j_beta(fam, qd, beta) - j_def) / std::max(1.0, std::abs(j_def)));
    const double diff = kl_plain(q, tilted(fam, l2).probs()) - kl_plain(q, tilted(fam, l1).probs());
    const double formula = log_partition(fam, l2) - log_partition(fam, l1) + reward * (l1 - l2);
    e2 = std::max(e2, std::abs(diff - formula) / std::max(1.0, std::abs(diff)));
    e2 = std::max(e2, std::abs(kl_difference(fam, qd, l1, l2) - diff) / std::max(1.0, std::abs(diff)));
  }
  o.require(e1 <= 1e-10, "J_beta identity error " + fmt(e1));
  o.require(e2 <= 1e-10, "KL difference identity error " + fmt(e2));
  if (o.pass) o.detail = "errors " + fmt(e1) + ", " + fmt(e2);
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto rows = beta_mu_table({0.1, 0.5, 0.9}, {0.9});
  const double lam[] = {4.39, 2.20, 0.0};
  const double beta[] = {0.23, 0.45};
  for (int i = 0; i < 3; ++i) {
    o.require(std::abs(rows[i].lambda_required - lam[i]) <= 0.05,
              "lambda " + fmt(rows[i].lambda_required));
  }
  for (int i = 0; i < 2; ++i) {
    o.require(rows[i].beta_required.is_finite() &&
                  std::abs(rows[i].beta_required.value() - beta[i]) <= 0.05,
              "beta " + rows[i].beta_required.to_string());
  }
  o.require(rows[2].beta_required.is_infinite(), "beta at A1=0.9 not infinite");
  if (o.pass) {
    o.detail = "lambda " + fmt(rows[0].lambda_required) + "/" + fmt(rows[1].lambda_required) + "/" +
               fmt(rows[2].lambda_required) + ", beta " + rows[0].beta_required.to_string() +
               "/" + rows[1].beta_required.to_string() + "/" + rows[2].beta_required.to_string();
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto lambdas = grid(0.0, 60.0, 0.25);
  const auto ill = ordering_illustration(lambdas);
  o.require(std::abs(ill.candidates[2].validity - 0.93) <= 1e-12,
            "mu(pi3) = " + format_double(ill.candidates[2].validity));
  o.require(std::abs(ill.candidates[3].validity - 0.98) <= 1e-12,
            "mu(pi4) = " + format_double(ill.candidates[3].validity));

  // Prediction from the hard-coded instance.
  const std::vector<double> a = {0.10, 0.22, 0.18, 0.25, 0.25};
  const std::vector<double> ps = {0.2, 0.44, 0.36, 0.0, 0.0};
  const std::vector<double> nu = {0.0, 0.0, 0.0, 0.4, 0.6};
  std::vector<double> p3(5);
  for (int i = 0; i < 5; ++i) p3[i] = 0.93 * ps[i] + 0.07 * nu[i];
  const std::vector<double> p4 = {0.05, 0.05, 0.88, 0.01, 0.01};
  const double predicted = (kl_plain(p3, a) - kl_plain(p4, a)) / (0.93 - 0.98);

  o.require(std::isfinite(ill.crossing_lambda_numeric), "no finite crossing");
  o.require(std::abs(ill.crossing_lambda_numeric - predicted) <= 1e-6,
            "crossing " + format_double(ill.crossing_lambda_numeric) + " vs " +
                format_double(predicted));
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (lambdas[j] > ill.crossing_lambda_numeric && !(ill.curves[3][j] < ill.curves[2][j])) {
      o.require(false, "pi4 not preferred at lambda " + fmt(lambdas[j]));
      break;
    }
  }
  if (o.pass) o.detail = "lambda* = " + format_double(ill.crossing_lambda_numeric);
  return o;
}

Outcome criterion6() {
  Outcome o;
  SweepConfig cfg;
  double worst_j = 0.0;
  double worst_f = 0.0;
  std::size_t params = 0;
  for (std::uint64_t s = 1; s <= 8; ++s) {
    const auto inst = make_toy_instance(s, cfg);
    auto pol = NGramPolicy::bigram(inst.space);
    SeededRng rng(derive_seed(s, 6));
    for (double& l : pol.logits()) l = rng.gaussian(0.0, 1.0);
    params = pol.num_parameters();
    for (double lambda : {0.5, 1.0, 5.0, 50.0}) {
      worst_j = std::max(worst_j, verify_gradients(pol, JBetaObjective{inst.family, 1.0 / lambda},
                                                   kFiniteDifferenceStep)
                                      .max_relative_error);
    }
    worst_f = std::max(worst_f, verify_gradients(pol, ForwardKlObjective{inst.pstar},
                                                 kFiniteDifferenceStep)
                                    .max_relative_error);
  }
  o.require(params == 21, "bigram parameter count " + std::to_string(params));
  o.require(worst_j < 1e-7, "J_beta gradient error " + fmt(worst_j));
  o.require(worst_f < 1e-7, "forward KL gradient error " + fmt(worst_f));
  if (o.pass) o.detail = "max rel. error J " + fmt(worst_j) + ", FKL " + fmt(worst_f);
  return o;
}

// Shared 8-seed bigram sweep for criteria 7-9 and the bigram part of 10.
struct SweepData {
  MultiSeedSummary summary;
  double seconds = 0.0;
};

const SweepData& bigram_sweep() {
  static const SweepData data = [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    SweepData d;
    d.summary = multi_seed(seeds, FamilyOrder::bigram, default_lambda_grid(), SweepConfig{}, threads);
    d.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return d;
  }();
  return data;
}

double mean_of(const MultiSeedSummary& s, double lambda, MetricStats LambdaAggregate::*m) {
  for (const auto& a : s.per_lambda) {
    if (a.lambda == lambda && a.start == StartKind::cold) return (a.*m).mean;
  }
  return std::nan("");
}

Outcome criterion7() {
  Outcome o;
  const auto& s = bigram_sweep().summary;
  const double val = mean_of(s, 50.0, &LambdaAggregate::validity);
  const double tvd = mean_of(s, 50.0, &LambdaAggregate::tvd_to_pstar);
  const double ent = mean_of(s, 50.0, &LambdaAggregate::entropy);
  const double fkl = mean_of(s, 50.0, &LambdaAggregate::fkl_from_pstar);
  o.require(val >= 0.985 && val <= 1.0, "mean validity " + fmt(val));
  o.require(tvd >= 0.45 && tvd <= 0.90, "mean TVD " + fmt(tvd));
  o.require(ent < 0.6, "mean entropy " + fmt(ent));
  o.require(fkl >= 4.0 && fkl <= 8.0, "mean KL(p*, pi) " + fmt(fkl));
  const double ref_kl = s.fkl_ref_kl.mean;
  const double ref_tvd = s.tvd_ref_tvd.mean;
  const double ref_val = s.fkl_ref_validity.mean;
  o.require(ref_kl >= 0.6 && ref_kl <= 1.4, "FKL reference KL " + fmt(ref_kl));
  o.require(ref_tvd >= 0.25 && ref_tvd <= 0.50, "TVD reference " + fmt(ref_tvd));
  o.require(ref_val >= 0.3 && ref_val <= 0.6, "FKL reference validity " + fmt(ref_val));
  for (const auto& seed : s.seeds) {
    const auto* r = seed.find(50.0, StartKind::cold);
    if (r == nullptr || r->aborted) {
      o.require(false, "seed " + std::to_string(seed.seed) + " missing lambda=50");
      continue;
    }
    o.require(r->tvd_to_pstar > seed.refs.tvd_ref_tvd,
              "seed " + std::to_string(seed.seed) + " TVD not dominated");
    o.require(r->fkl_from_pstar.as_double() > seed.refs.fkl_ref_kl,
              "seed " + std::to_string(seed.seed) + " KL not dominated");
  }
  const std::string stats = "validity " + fmt(val) + ", TVD " + fmt(tvd) + ", entropy " +
                            fmt(ent) + ", KL " + fmt(fkl) + ", refs KL " + fmt(ref_kl) +
                            " / TVD " + fmt(ref_tvd) + " / validity " + fmt(ref_val);
  o.detail = o.pass ? stats : o.detail + " [" + stats + "]";
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto& s = bigram_sweep().summary;
  // Canonical order: index = 9 t0 + 3 t1 + t2.
  const std::size_t diag[] = {0, 13, 26};
  std::string diag_masses;
  std::string top_masses;
  for (const auto& seed : s.seeds) {
    const auto* r5 = seed.find(5.0, StartKind::cold);
    double mass = 0.0;
    for (auto i : diag) mass += r5->policy_probs[i];
    diag_masses += (diag_masses.empty() ? "" : " ") + fmt(mass);
    o.require(mass >= 0.85, "seed " + std::to_string(seed.seed) + " diagonal mass at 5 = " + fmt(mass));
    double lowest_top = 1.0;
    for (const auto* r : seed.cold_records()) {
      if (r->lambda < 20.0) continue;
      const double top = *std::max_element(r->policy_probs.begin(), r->policy_probs.end());
      lowest_top = std::min(lowest_top, top);
      o.require(top >= 0.98, "seed " + std::to_string(seed.seed) + " top mass at lambda " +
                                 fmt(r->lambda) + " = " + fmt(top));
    }
    top_masses += (top_masses.empty() ? "" : " ") + fmt(lowest_top);
  }
  const std::string stats = "diagonal@5: " + diag_masses + "; min top@>=20: " + top_masses;
  o.detail = o.pass ? stats : o.detail + " [" + stats + "]";
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto& s = bigram_sweep().summary;
  int dips = 0;
  std::string argmins;
  for (const auto& seed : s.seeds) {
    const auto rep = tvd_dip_diagnostic(seed, 1e-6);
    o.require(rep.fkl_monotone, "seed " + std::to_string(seed.seed) +
                                    " forward KL decreases by " + fmt(rep.worst_fkl_drop));
    if (rep.dip_present) ++dips;
    argmins += (argmins.empty() ? "" : " ") + fmt(rep.argmin_lambda);
  }
  o.require(dips >= 5, "dip on only " + std::to_string(dips) + " of 8 seeds");
  const std::string stats = std::to_string(dips) + "/8 dips, argmin lambda: " + argmins;
  o.detail = o.pass ? stats : o.detail + " [" + stats + "]";
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto& s = bigram_sweep().summary;
  std::string bigram_kl;
  for (const auto& seed : s.seeds) {
    bigram_kl += (bigram_kl.empty() ? "" : " ") + fmt(seed.refs.fkl_ref_kl);
    o.require(seed.refs.fkl_ref_kl > 0.3 && seed.refs.fkl_ref_kl_closed > 0.3,
              "seed " + std::to_string(seed.seed) + " bigram forward KL " + fmt(seed.refs.fkl_ref_kl));
  }

  SweepConfig cfg;
  cfg.compute_references = false;
  cfg.warm_start = true;
  int better = 0;
  double worst_full = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto inst = make_toy_instance(seed, cfg);
    const auto full = project_conditionals(inst.space, full_context_lengths(3), inst.pstar);
    worst_full = std::max(worst_full, kl_divergence(inst.pstar, full).as_double());
    const auto sum = run_sweep(seed, FamilyOrder::full, {50.0}, cfg);
    const auto* cold = sum.find(50.0, StartKind::cold);
    const auto* warm = sum.find(50.0, StartKind::warm);
    if (warm->fkl_from_pstar.as_double() < cold->fkl_from_pstar.as_double()) ++better;
  }
  o.require(worst_full < 1e-6, "full family forward KL " + fmt(worst_full));
  o.require(better >= 6, "warm start better on only " + std::to_string(better) + " of 8 seeds");
  const std::string stats = "bigram KL " + bigram_kl + "; full-family KL " + fmt(worst_full) +
                            "; warm better on " + std::to_string(better) + "/8";
  o.detail = o.pass ? stats : o.detail + " [" + stats + "]";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form convergence", criterion1},
      {"bijection and Legendre suite", criterion2},
      {"identity suite", criterion3},
      {"beta/mu table", criterion4},
      {"ordering instance", criterion5},
      {"gradient verification", criterion6},
      {"mode-collapse reproduction", criterion7},
      {"top-sequence checkpoints", criterion8},
      {"TVD-dip diagnostic", criterion9},
      {"misspecification witness", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %zu (%s, %.2fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
