#include "klgeo/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "klgeo/format.hpp"
#include "klgeo/rng.hpp"

namespace klgeo {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("OptimizerConfig: learning_rate must be positive");
  }
  if (steps == 0) throw DomainError("OptimizerConfig: steps must be positive");
  if (restarts == 0) throw DomainError("OptimizerConfig: restarts must be >= 1");
  if (decay) {
    if (!(decay->factor > 0.0 && decay->factor < 1.0)) {
      throw DomainError("OptimizerConfig: decay factor must lie in (0, 1)");
    }
    if (decay->every == 0) throw DomainError("OptimizerConfig: decay interval must be positive");
  }
  if (steps > budget / restarts) {
    throw DomainError("OptimizerConfig: steps * restarts exceeds the budget of " +
                      std::to_string(budget));
  }
  if (trace_stride == 0) throw DomainError("OptimizerConfig: trace_stride must be positive");
  if (const auto* r = std::get_if<InitRandom>(&init); r && !(r->stddev > 0.0)) {
    throw DomainError("OptimizerConfig: random init stddev must be positive");
  }
}

double OptimizerConfig::learning_rate_at(std::size_t step) const {
  if (!decay) return learning_rate;
  return learning_rate * std::pow(decay->factor, static_cast<double>(step / decay->every));
}

OptimizerConfig OptimizerConfig::j_beta_defaults() {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.steps = 8000;
  return cfg;
}

OptimizerConfig OptimizerConfig::forward_kl_defaults() {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.steps = 15000;
  return cfg;
}

OptimizerConfig OptimizerConfig::tvd_defaults(std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.steps = 5000;
  cfg.decay = DecaySchedule{0.5, 1000};
  cfg.restarts = 200;
  cfg.init = InitRandom{seed, 1.0};
  cfg.trace_stride = 500;
  return cfg;
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

NGramPolicy random_policy(const NGramPolicy& family, std::uint64_t seed, double stddev) {
  NGramPolicy policy = family;
  SeededRng rng(seed);
  for (double& logit : policy.logits()) logit = rng.gaussian(0.0, stddev);
  return policy;
}

NGramPolicy initial_policy(const NGramPolicy& start, const OptimizerConfig& cfg,
                           std::size_t restart) {
  return std::visit(
      [&](const auto& init) -> NGramPolicy {
        using T = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<T, InitBaseModel>) {
          return start;
        } else if constexpr (std::is_same_v<T, InitWarmStart>) {
          if (!init.policy.same_family(start)) {
            throw StructuralError("warm start policy belongs to a different family");
          }
          return init.policy;
        } else {
          return random_policy(start, derive_seed(init.seed, restart), init.stddev);
        }
      },
      cfg.init);
}

// One gradient run from `policy`; never throws on numeric trouble, reports it.
RunTrace single_run(const Objective& objective, NGramPolicy policy, const OptimizerConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const double sign = is_maximized(objective) ? 1.0 : -1.0;
  RunTrace run(policy);
  std::vector<double> grad;
  std::size_t step = 0;
  for (; step < cfg.steps; ++step) {
    grad = grad_objective(policy, objective);
    const bool record = step % cfg.trace_stride == 0;
    if (record) {
      const double value = evaluate_objective(policy, objective);
      if (!std::isfinite(value)) {
        run.aborted = true;
        run.diagnostic = "non-finite objective at step " + std::to_string(step);
        break;
      }
      run.trace.push_back({step, value});
    }
    if (!all_finite(grad)) {
      run.aborted = true;
      run.diagnostic = "non-finite gradient at step " + std::to_string(step);
      break;
    }
    const double lr = cfg.learning_rate_at(step);
    auto logits = policy.logits();
    for (std::size_t i = 0; i < grad.size(); ++i) logits[i] += sign * lr * grad[i];
  }
  run.steps_taken = step;
  run.final_objective = evaluate_objective(policy, objective);
  if (!run.aborted && !std::isfinite(run.final_objective)) {
    run.aborted = true;
    run.diagnostic = "non-finite objective after the final step";
  }
  if (run.trace.empty() || run.trace.back().step != step) {
    run.trace.push_back({step, run.final_objective});
  }
  grad = grad_objective(policy, objective);
  run.final_gradient_norm = norm2(grad);
  run.converged = !run.aborted && run.final_gradient_norm < cfg.convergence_tolerance;
  run.final_policy = std::move(policy);
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

RunTrace run_gradient_method(const Objective& objective, const NGramPolicy& start,
                             const OptimizerConfig& cfg) {
  cfg.validate();
  const bool maximize = is_maximized(objective);
  if (cfg.restarts == 1) return single_run(objective, initial_policy(start, cfg, 0), cfg);

  std::vector<std::optional<RunTrace>> runs(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
    runs[r] = single_run(objective, initial_policy(start, cfg, r), cfg);
  });

  // Keyed by restart index, so the winner does not depend on thread timing.
  std::size_t best = cfg.restarts;
  std::vector<double> finals(cfg.restarts);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    finals[r] = runs[r]->final_objective;
    if (runs[r]->aborted) continue;
    if (best == cfg.restarts) {
      best = r;
      continue;
    }
    const double cur = runs[best]->final_objective;
    if (maximize ? finals[r] > cur : finals[r] < cur) best = r;
  }
  if (best == cfg.restarts) best = 0;
  RunTrace out = std::move(*runs[best]);
  out.best_restart = best;
  out.restart_objectives = std::move(finals);
  return out;
}

RunTrace ascend_j_beta(const TiltedFamily& fam, double lambda, const NGramPolicy& start,
                       const OptimizerConfig& cfg) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("ascend_j_beta: lambda = 1/beta must be finite and positive");
  }
  return run_gradient_method(JBetaObjective{fam, 1.0 / lambda}, start, cfg);
}

RunTrace fit_forward_kl(const FiniteDistribution& target, const NGramPolicy& start,
                        const OptimizerConfig& cfg) {
  return run_gradient_method(ForwardKlObjective{target}, start, cfg);
}

RunTrace fit_tvd(const FiniteDistribution& target, const NGramPolicy& family,
                 const OptimizerConfig& cfg) {
  return run_gradient_method(TvdObjective{target}, family, cfg);
}

GradientCheck verify_gradients(const NGramPolicy& policy, const Objective& objective, double h) {
  if (!(h > 0.0)) throw DomainError("verify_gradients: step must be positive");
  GradientCheck out;
  out.analytic = grad_objective(policy, objective);
  out.numeric = finite_difference_gradient(policy, objective, h);
  for (std::size_t i = 0; i < out.analytic.size(); ++i) {
    const double a = out.analytic[i];
    const double f = out.numeric[i];
    const double denom = std::max({std::abs(a), std::abs(f), 1e-12});
    const double err = std::abs(a - f) / denom;
    if (err > out.max_relative_error) {
      out.max_relative_error = err;
      out.worst_index = i;
    }
  }
  return out;
}

WarmStartResult warm_start_run(const TiltedFamily& fam, double from_lambda, double to_lambda,
                               const NGramPolicy& start, const OptimizerConfig& cfg) {
  auto moderate = ascend_j_beta(fam, from_lambda, start, cfg);
  OptimizerConfig second = cfg;
  second.init = InitWarmStart{moderate.final_policy};
  auto refined = ascend_j_beta(fam, to_lambda, start, second);
  return WarmStartResult{std::move(moderate), std::move(refined)};
}

}  // namespace klgeo
