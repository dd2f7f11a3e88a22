// Plain first-order loops over policy logits: gradient ascent on J_beta,
// gradient descent on the forward KL and (with finite-difference gradients)
// on the total variation distance, plus the gradient-verification harness.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "klgeo/ngram_policy.hpp"
#include "klgeo/tilted_family.hpp"

namespace klgeo {

/// Multiply the learning rate by `factor` every `every` steps.
struct DecaySchedule {
  double factor = 0.5;
  std::size_t every = 1000;
};

/// Start at the policy handed to the optimizer (callers pass the base model).
struct InitBaseModel {};
struct InitWarmStart {
  NGramPolicy policy;
};
/// i.i.d. Gaussian(0, stddev) logits. For multi-restart fits the seed of
/// restart r is derive_seed(seed, r).
struct InitRandom {
  std::uint64_t seed = 0;
  double stddev = 1.0;
};
using InitSpec = std::variant<InitBaseModel, InitWarmStart, InitRandom>;

struct OptimizerConfig {
  double learning_rate = 0.1;
  std::size_t steps = 8000;
  std::optional<DecaySchedule> decay;
  std::size_t restarts = 1;
  InitSpec init = InitBaseModel{};
  std::size_t trace_stride = 100;
  /// Upper bound on steps * restarts.
  std::size_t budget = 100'000'000;
  /// Gradient-norm threshold for declaring convergence.
  double convergence_tolerance = 1e-6;
  /// Worker threads for independent restarts.
  std::size_t threads = 1;

  void validate() const;
  double learning_rate_at(std::size_t step) const;

  /// lr 0.1, 8000 steps, start at the base model.
  static OptimizerConfig j_beta_defaults();
  /// lr 0.05, 15000 steps, start at the base model.
  static OptimizerConfig forward_kl_defaults();
  /// 200 restarts of 5000 steps, lr 0.1 halved every 1000 steps,
  /// random Gaussian(0, 1) starts derived from `seed`.
  static OptimizerConfig tvd_defaults(std::uint64_t seed);
};

struct TracePoint {
  std::size_t step = 0;
  double objective = 0.0;
};

struct RunTrace {
  explicit RunTrace(NGramPolicy policy) : final_policy(std::move(policy)) {}

  std::vector<TracePoint> trace;
  NGramPolicy final_policy;
  double final_objective = 0.0;
  double final_gradient_norm = 0.0;
  std::size_t steps_taken = 0;
  double wall_seconds = 0.0;
  bool converged = false;
  bool aborted = false;
  std::string diagnostic;
  /// Multi-restart runs: index of the winning restart and every restart's
  /// final objective.
  std::size_t best_restart = 0;
  std::vector<double> restart_objectives;
};

/// Gradient ascent on J_beta with beta = 1 / lambda (lambda > 0).
RunTrace ascend_j_beta(const TiltedFamily& fam, double lambda, const NGramPolicy& start,
                       const OptimizerConfig& cfg);

/// Gradient descent on KL(target || pi_theta), convex in the logits.
RunTrace fit_forward_kl(const FiniteDistribution& target, const NGramPolicy& start,
                        const OptimizerConfig& cfg);

/// Best-effort multi-restart minimization of TVD(pi_theta, target) with
/// central finite-difference gradients. Returns the lowest-TVD restart.
RunTrace fit_tvd(const FiniteDistribution& target, const NGramPolicy& family,
                 const OptimizerConfig& cfg);

/// Single gradient run on any objective (ascent for J_beta, descent otherwise).
RunTrace run_gradient_method(const Objective& objective, const NGramPolicy& start,
                             const OptimizerConfig& cfg);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Elementwise |g - g_fd| / max(|g|, |g_fd|, 1e-12) between the analytic
/// gradient and central differences with step h.
GradientCheck verify_gradients(const NGramPolicy& policy, const Objective& objective, double h);

struct WarmStartResult {
  RunTrace moderate;  ///< ascent at from_lambda, starting at `start`
  RunTrace refined;   ///< ascent at to_lambda, starting at moderate's result
};

WarmStartResult warm_start_run(const TiltedFamily& fam, double from_lambda, double to_lambda,
                               const NGramPolicy& start, const OptimizerConfig& cfg);

}  // namespace klgeo
