#include "klgeo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

#include "klgeo/format.hpp"

namespace klgeo {

std::string to_string(FamilyOrder order) {
  return order == FamilyOrder::bigram ? "bigram" : "full";
}

FamilyOrder parse_family_order(const std::string& text) {
  if (text == "bigram") return FamilyOrder::bigram;
  if (text == "full" || text == "trigram") return FamilyOrder::full;
  throw DomainError("unknown family order '" + text + "' (expected bigram or full)");
}

std::vector<std::size_t> context_lengths_for(FamilyOrder order, std::size_t length) {
  return order == FamilyOrder::bigram ? bigram_context_lengths(length)
                                      : full_context_lengths(length);
}

std::vector<double> default_lambda_grid() {
  return {0.5, 1, 2, 3, 5, 7, 10, 15, 20, 35, 50, 100};
}

double SweepConfig::logit_stddev() const {
  if (!(sigma > 0.0)) throw DomainError("SweepConfig: sigma must be positive");
  return sigma_is_variance ? std::sqrt(sigma) : sigma;
}

std::string to_string(StartKind kind) { return kind == StartKind::cold ? "cold" : "warm"; }

std::vector<const SweepRecord*> SeedSummary::cold_records() const {
  std::vector<const SweepRecord*> out;
  for (const auto& r : records) {
    if (r.start == StartKind::cold) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SweepRecord* a, const SweepRecord* b) { return a->lambda < b->lambda; });
  return out;
}

const SweepRecord* SeedSummary::find(double lambda, StartKind start) const {
  for (const auto& r : records) {
    if (r.lambda == lambda && r.start == start) return &r;
  }
  return nullptr;
}

ToyInstance make_toy_instance(std::uint64_t seed, const SweepConfig& cfg) {
  SequenceSpace space(cfg.vocab_size, cfg.length);
  auto verifier = make_verifier_first_equals_last(space);
  auto base_policy = random_base_model(space, seed, cfg.logit_stddev());
  auto base = base_policy.to_distribution();
  auto pstar = condition(base, verifier.valid_set());
  TiltedFamily family(base, verifier);
  return ToyInstance{std::move(space), std::move(verifier), std::move(base_policy),
                     std::move(base), std::move(pstar), std::move(family)};
}

std::vector<SequenceProb> top_sequences(const FiniteDistribution& dist, std::size_t k) {
  if (k == 0) throw DomainError("top_sequences: k must be >= 1");
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<SequenceProb> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back({dist.label(i), i, dist[i]});
  return out;
}

std::vector<SequenceProb> top_sequences_table(const SweepRecord& record,
                                              const std::vector<std::string>& labels,
                                              std::size_t k) {
  if (labels.size() != record.policy_probs.size()) {
    throw StructuralError("top_sequences_table: labels do not match the record");
  }
  auto shared = std::make_shared<const OutcomeLabels>(labels);
  return top_sequences(FiniteDistribution(shared, record.policy_probs), k);
}

SweepRecord make_record(const ToyInstance& inst, double lambda, const RunTrace& run,
                        StartKind start, std::size_t top_k) {
  const auto dist = run.final_policy.to_distribution();
  SweepRecord rec;
  rec.lambda = lambda;
  rec.beta = 1.0 / lambda;
  rec.start = start;
  rec.validity = expected_reward(dist, inst.verifier);
  rec.tvd_to_pstar = total_variation(dist, inst.pstar);
  rec.fkl_from_pstar = kl_divergence(inst.pstar, dist);
  rec.rkl_to_tilted = kl_divergence(dist, tilted(inst.family, lambda));
  rec.entropy = entropy(dist);
  rec.j_beta_value = j_beta(inst.family, dist, rec.beta);
  rec.log_partition = log_partition(inst.family, lambda);
  rec.aborted = run.aborted;
  rec.diagnostic = run.diagnostic;
  rec.top_sequences = top_sequences(dist, top_k);
  rec.policy_probs.assign(dist.probs().begin(), dist.probs().end());
  return rec;
}

namespace {

void check_lambda_grid(const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw DomainError("lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw DomainError("lambda grid values must be finite and positive");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw DomainError("lambda grid must be strictly increasing");
    }
  }
}

SweepRecord aborted_record(double lambda, StartKind start, const std::string& why) {
  SweepRecord rec;
  rec.lambda = lambda;
  rec.beta = 1.0 / lambda;
  rec.start = start;
  rec.aborted = true;
  rec.diagnostic = why;
  return rec;
}

}  // namespace

SeedSummary run_sweep(std::uint64_t seed, FamilyOrder order, const std::vector<double>& lambdas,
                      const SweepConfig& cfg) {
  check_lambda_grid(lambdas);
  const auto inst = make_toy_instance(seed, cfg);
  const auto ctx = context_lengths_for(order, cfg.length);
  // Restricted families start at the forward-KL projection of the base.
  const auto start = NGramPolicy::from_distribution(inst.space, ctx, inst.base);

  SeedSummary summary;
  summary.seed = seed;
  summary.order = order;
  summary.a1_base = inst.family.valid_mass();
  summary.pstar_entropy = entropy(inst.pstar);
  summary.base_entropy = entropy(inst.base);
  summary.labels = *inst.space.labels();

  if (cfg.compute_references) {
    const auto fkl = fit_forward_kl(inst.pstar, start, cfg.fkl_fit);
    const auto fkl_dist = fkl.final_policy.to_distribution();
    OptimizerConfig tvd_cfg = cfg.tvd_fit;
    double init_stddev = 1.0;
    if (const auto* r = std::get_if<InitRandom>(&tvd_cfg.init)) init_stddev = r->stddev;
    tvd_cfg.init = InitRandom{seed, init_stddev};
    const auto tvd = fit_tvd(inst.pstar, start, tvd_cfg);
    const auto tvd_dist = tvd.final_policy.to_distribution();

    summary.has_references = true;
    auto& refs = summary.refs;
    refs.fkl_ref_validity = expected_reward(fkl_dist, inst.verifier);
    refs.fkl_ref_kl = kl_divergence(inst.pstar, fkl_dist).value();
    refs.fkl_ref_kl_closed =
        kl_divergence(inst.pstar, project_conditionals(inst.space, ctx, inst.pstar)).as_double();
    refs.fkl_ref_tvd = total_variation(fkl_dist, inst.pstar);
    refs.tvd_ref_tvd = total_variation(tvd_dist, inst.pstar);
    refs.tvd_ref_validity = expected_reward(tvd_dist, inst.verifier);
    refs.tvd_ref_fkl = kl_divergence(inst.pstar, tvd_dist);
    refs.tvd_best_restart = tvd.best_restart;
  }

  auto run_one = [&](double lambda, const OptimizerConfig& ocfg, StartKind kind) {
    try {
      const auto run = ascend_j_beta(inst.family, lambda, start, ocfg);
      summary.records.push_back(make_record(inst, lambda, run, kind, cfg.top_k));
    } catch (const DomainError& e) {
      summary.records.push_back(aborted_record(lambda, kind, e.what()));
    }
  };

  for (double lambda : lambdas) run_one(lambda, cfg.ascent, StartKind::cold);

  if (cfg.warm_start) {
    const auto moderate = ascend_j_beta(inst.family, cfg.warm_from_lambda, start, cfg.ascent);
    OptimizerConfig warm = cfg.ascent;
    warm.init = InitWarmStart{moderate.final_policy};
    for (double lambda : lambdas) run_one(lambda, warm, StartKind::warm);
  }
  return summary;
}

MetricStats summarize(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

MultiSeedSummary multi_seed(const std::vector<std::uint64_t>& seeds, FamilyOrder order,
                            const std::vector<double>& lambdas, const SweepConfig& cfg,
                            std::size_t threads) {
  if (seeds.size() < 2) throw DomainError("multi_seed: at least two seeds are required");
  check_lambda_grid(lambdas);

  std::vector<std::optional<SeedSummary>> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        results[i] = run_sweep(seeds[i], order, lambdas, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const std::size_t n = std::clamp<std::size_t>(threads, 1, seeds.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SeedSummary> summaries;
  for (auto& r : results) summaries.push_back(std::move(*r));
  return aggregate_summaries(std::move(summaries), order, lambdas);
}

MultiSeedSummary aggregate_summaries(std::vector<SeedSummary> summaries, FamilyOrder order,
                                     const std::vector<double>& lambdas) {
  if (summaries.empty()) throw DomainError("aggregate_summaries: no summaries");
  MultiSeedSummary out;
  out.order = order;
  out.seeds = std::move(summaries);

  std::vector<double> a1;
  for (const auto& s : out.seeds) a1.push_back(s.a1_base);
  out.a1_base = summarize(a1);

  for (StartKind kind : {StartKind::cold, StartKind::warm}) {
    for (double lambda : lambdas) {
      std::vector<double> val, tvd, fkl, ent, jb;
      for (const auto& s : out.seeds) {
        const auto* rec = s.find(lambda, kind);
        if (rec == nullptr || rec->aborted) continue;
        val.push_back(rec->validity);
        tvd.push_back(rec->tvd_to_pstar);
        fkl.push_back(rec->fkl_from_pstar.as_double());
        ent.push_back(rec->entropy);
        jb.push_back(rec->j_beta_value);
      }
      if (val.empty()) continue;
      out.per_lambda.push_back(LambdaAggregate{lambda, kind, summarize(val), summarize(tvd),
                                               summarize(fkl), summarize(ent), summarize(jb)});
    }
  }

  if (out.seeds.front().has_references) {
    std::vector<double> v, k, t;
    for (const auto& s : out.seeds) {
      v.push_back(s.refs.fkl_ref_validity);
      k.push_back(s.refs.fkl_ref_kl);
      t.push_back(s.refs.tvd_ref_tvd);
    }
    out.fkl_ref_validity = summarize(v);
    out.fkl_ref_kl = summarize(k);
    out.tvd_ref_tvd = summarize(t);
  }
  return out;
}

OrderingIllustration ordering_illustration(const std::vector<double>& lambdas) {
  auto labels = std::make_shared<const OutcomeLabels>(OutcomeLabels{"y1", "y2", "y3", "y4", "y5"});
  FiniteDistribution base(labels, {0.10, 0.22, 0.18, 0.25, 0.25});
  BinaryVerifier verifier({true, true, true, false, false});
  TiltedFamily family(base, verifier);
  auto pstar = condition(base, verifier.valid_set());

  constexpr double eps = 0.07;
  const std::vector<double> nu0 = {0.0, 0.0, 0.0, 0.4, 0.6};
  std::vector<double> pi3(5);
  for (std::size_t i = 0; i < 5; ++i) pi3[i] = (1.0 - eps) * pstar[i] + eps * nu0[i];

  std::vector<std::pair<std::string, FiniteDistribution>> dists = {
      {"pi1", pstar},
      {"pi2", FiniteDistribution(labels, {1.0, 0.0, 0.0, 0.0, 0.0})},
      {"pi3", FiniteDistribution(labels, pi3)},
      {"pi4", FiniteDistribution(labels, {0.05, 0.05, 0.88, 0.01, 0.01})},
  };

  OrderingIllustration out{family, pstar, {}, lambdas, {}, 0.0, 0.0};
  for (auto& [name, d] : dists) {
    OrderingCandidate c{name, d, expected_reward(d, verifier), total_variation(d, pstar),
                        kl_divergence(d, base).value()};
    std::vector<double> curve;
    curve.reserve(lambdas.size());
    for (double lambda : lambdas) curve.push_back(kl_divergence(d, tilted(family, lambda)).value());
    out.curves.push_back(std::move(curve));
    out.candidates.push_back(std::move(c));
  }

  const auto& p3 = out.candidates[2].dist;
  const auto& p4 = out.candidates[3].dist;
  out.crossing_lambda = crossing_lambda(family, p3, p4).value();

  // Gap KL(pi3 || p_l) - KL(pi4 || p_l) evaluated directly, then bisected.
  auto gap = [&](double lambda) {
    const auto p = tilted(family, lambda);
    return kl_divergence(p3, p).value() - kl_divergence(p4, p).value();
  };
  // Expanding bracket; beyond |lambda| ~ 700 the tilted model loses support.
  double lo = -1.0;
  double hi = 1.0;
  while ((gap(lo) < 0.0) == (gap(hi) < 0.0) && hi < 512.0) {
    lo *= 2.0;
    hi *= 2.0;
  }
  const bool rising = gap(hi) > gap(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((gap(mid) < 0.0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.crossing_lambda_numeric = 0.5 * (lo + hi);
  return out;
}

std::vector<BetaMuRow> beta_mu_table(const std::vector<double>& a1_values,
                                     const std::vector<double>& mu_targets) {
  std::vector<BetaMuRow> rows;
  for (double a1 : a1_values) {
    for (double mu : mu_targets) {
      BetaMuRow row;
      row.a1 = a1;
      row.mu_target = mu;
      row.lambda_required = binary::natural_param(a1, mu);
      row.beta_required = row.lambda_required == 0.0
                              ? ExtendedReal::infinity()
                              : ExtendedReal::finite(1.0 / row.lambda_required);
      row.kappa_cost = binary::divergence_cost(a1, mu);
      rows.push_back(row);
    }
  }
  return rows;
}

TiltedFamily binary_family(double a1) {
  if (!(a1 > 0.0 && a1 < 1.0)) throw DomainError("binary_family: A1 must lie in (0, 1)");
  const double a0 = 1.0 - a1;
  FiniteDistribution base({0.5 * a0, 0.5 * a0, 0.5 * a1, 0.5 * a1});
  return TiltedFamily(base, BinaryVerifier({false, false, true, true}));
}

std::vector<GeometryRow> geometry_profile(const std::vector<double>& a1_values,
                                          const std::vector<double>& lambdas) {
  std::vector<GeometryRow> rows;
  for (double a1 : a1_values) {
    const auto fam = binary_family(a1);
    const auto profile = convergence_profile(fam, lambdas);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const auto g = geometry_point(fam, lambdas[i]);
      const auto& c = profile[i];
      rows.push_back(GeometryRow{a1, lambdas[i], g.mu, g.kappa, g.log_z, c.tvd_to_pstar,
                                 c.fkl_from_pstar, c.rkl_to_pstar, c.tvd_numeric, c.fkl_numeric});
    }
  }
  return rows;
}

A1Estimate estimate_a1(const BinaryVerifier& verifier, const FiniteDistribution& base,
                       std::size_t batch, SeededRng& rng) {
  if (batch == 0) throw DomainError("estimate_a1: batch must be >= 1");
  if (verifier.size() != base.size()) throw StructuralError("estimate_a1: dimension mismatch");
  std::vector<double> cdf(base.size());
  std::partial_sum(base.probs().begin(), base.probs().end(), cdf.begin());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    if (verifier(idx)) ++hits;
  }
  A1Estimate est;
  est.batch = batch;
  est.estimate = static_cast<double>(hits) / static_cast<double>(batch);
  est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(batch));
  est.exact = expected_reward(base, verifier);
  return est;
}

TvdDipReport tvd_dip_diagnostic(const SeedSummary& summary, double fkl_step_tolerance) {
  const auto cold = summary.cold_records();
  if (cold.size() < 8 || cold.front()->lambda > 1.0 || cold.back()->lambda < 20.0) {
    throw DomainError("tvd_dip_diagnostic: grid must span [1, 20] with at least 8 points");
  }
  TvdDipReport rep;
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < cold.size(); ++i) {
    if (cold[i]->tvd_to_pstar < cold[argmin]->tvd_to_pstar) argmin = i;
  }
  rep.argmin_lambda = cold[argmin]->lambda;
  rep.dip_present = argmin > 0 && argmin + 1 < cold.size() && rep.argmin_lambda >= 1.0 &&
                    rep.argmin_lambda <= 8.0 &&
                    cold[argmin]->tvd_to_pstar < cold.front()->tvd_to_pstar &&
                    cold[argmin]->tvd_to_pstar < cold.back()->tvd_to_pstar;
  rep.fkl_monotone = true;
  for (std::size_t i = 1; i < cold.size(); ++i) {
    const double drop =
        cold[i - 1]->fkl_from_pstar.as_double() - cold[i]->fkl_from_pstar.as_double();
    rep.worst_fkl_drop = std::max(rep.worst_fkl_drop, drop);
    if (drop > fkl_step_tolerance) rep.fkl_monotone = false;
  }
  return rep;
}

}  // namespace klgeo
