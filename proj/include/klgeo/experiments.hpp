// The studies built on top of the geometry and optimizer layers: lambda sweeps
// of the misspecified bigram experiment with reference policies, multi-seed
// aggregation, the five-outcome ordering instance, the beta/mu table, A1
// estimation, top-sequence tables and the TVD-dip diagnostic.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "klgeo/distribution.hpp"
#include "klgeo/ngram_policy.hpp"
#include "klgeo/optimizer.hpp"
#include "klgeo/rng.hpp"
#include "klgeo/tilted_family.hpp"

namespace klgeo {

enum class FamilyOrder { bigram, full };

std::string to_string(FamilyOrder order);
FamilyOrder parse_family_order(const std::string& text);
std::vector<std::size_t> context_lengths_for(FamilyOrder order, std::size_t length);

/// {0.5, 1, 2, 3, 5, 7, 10, 15, 20, 35, 50, 100}
std::vector<double> default_lambda_grid();

struct SweepConfig {
  std::size_t vocab_size = 3;
  std::size_t length = 3;
  /// Base-model logit scale. Interpreted as a standard deviation unless
  /// sigma_is_variance is set.
  double sigma = 0.5;
  bool sigma_is_variance = false;
  OptimizerConfig ascent = OptimizerConfig::j_beta_defaults();
  OptimizerConfig fkl_fit = OptimizerConfig::forward_kl_defaults();
  /// The init seed of tvd_fit is replaced per base-model seed.
  OptimizerConfig tvd_fit = OptimizerConfig::tvd_defaults(0);
  bool compute_references = true;
  /// Also run every lambda warm-started from the warm_from_lambda solution.
  bool warm_start = false;
  double warm_from_lambda = 3.0;
  std::size_t top_k = 5;

  double logit_stddev() const;
};

struct SequenceProb {
  std::string sequence;
  std::size_t index = 0;
  double probability = 0.0;
};

enum class StartKind { cold, warm };
std::string to_string(StartKind kind);

struct SweepRecord {
  double lambda = 0.0;
  double beta = 0.0;
  StartKind start = StartKind::cold;
  double validity = 0.0;
  double tvd_to_pstar = 0.0;
  ExtendedReal fkl_from_pstar = ExtendedReal::infinity();
  ExtendedReal rkl_to_tilted = ExtendedReal::infinity();
  double entropy = 0.0;
  double j_beta_value = 0.0;
  double log_partition = 0.0;
  bool aborted = false;
  std::string diagnostic;
  std::vector<SequenceProb> top_sequences;
  /// Full policy distribution in canonical order.
  std::vector<double> policy_probs;
};

struct ReferenceMetrics {
  double fkl_ref_validity = 0.0;
  double fkl_ref_kl = 0.0;          ///< KL(p* || pi_FKL) reached by gradient descent
  double fkl_ref_kl_closed = 0.0;   ///< exact minimum via conditional projection
  double fkl_ref_tvd = 0.0;
  double tvd_ref_tvd = 0.0;
  double tvd_ref_validity = 0.0;
  ExtendedReal tvd_ref_fkl = ExtendedReal::infinity();
  std::size_t tvd_best_restart = 0;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  FamilyOrder order = FamilyOrder::bigram;
  double a1_base = 0.0;
  double pstar_entropy = 0.0;
  double base_entropy = 0.0;
  std::vector<SweepRecord> records;
  bool has_references = false;
  ReferenceMetrics refs;
  std::vector<std::string> labels;

  /// Cold-start records in lambda order.
  std::vector<const SweepRecord*> cold_records() const;
  const SweepRecord* find(double lambda, StartKind start) const;
};

/// Problem instance shared by every study: space, verifier, base model.
struct ToyInstance {
  SequenceSpace space;
  BinaryVerifier verifier;
  NGramPolicy base_policy;
  FiniteDistribution base;
  FiniteDistribution pstar;
  TiltedFamily family;
};

ToyInstance make_toy_instance(std::uint64_t seed, const SweepConfig& cfg);

SweepRecord make_record(const ToyInstance& inst, double lambda, const RunTrace& run,
                        StartKind start, std::size_t top_k);

SeedSummary run_sweep(std::uint64_t seed, FamilyOrder order, const std::vector<double>& lambdas,
                      const SweepConfig& cfg);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;
};

MetricStats summarize(const std::vector<double>& values);

struct LambdaAggregate {
  double lambda = 0.0;
  StartKind start = StartKind::cold;
  MetricStats validity;
  MetricStats tvd_to_pstar;
  MetricStats fkl_from_pstar;
  MetricStats entropy;
  MetricStats j_beta_value;
};

struct MultiSeedSummary {
  FamilyOrder order = FamilyOrder::bigram;
  std::vector<LambdaAggregate> per_lambda;
  MetricStats a1_base;
  MetricStats fkl_ref_validity;
  MetricStats fkl_ref_kl;
  MetricStats tvd_ref_tvd;
  std::vector<SeedSummary> seeds;
};

/// Seeds run in parallel on `threads` workers; results are keyed by seed
/// position, not completion order. Requires at least two seeds.
MultiSeedSummary multi_seed(const std::vector<std::uint64_t>& seeds, FamilyOrder order,
                            const std::vector<double>& lambdas, const SweepConfig& cfg,
                            std::size_t threads = 1);

/// Per-lambda statistics over already computed summaries (one or more).
MultiSeedSummary aggregate_summaries(std::vector<SeedSummary> summaries, FamilyOrder order,
                                     const std::vector<double>& lambdas);

struct OrderingCandidate {
  std::string name;
  FiniteDistribution dist;
  double validity = 0.0;
  double tvd_to_pstar = 0.0;
  double kl_to_base = 0.0;
};

struct OrderingIllustration {
  TiltedFamily family;
  FiniteDistribution pstar;
  std::vector<OrderingCandidate> candidates;
  std::vector<double> lambdas;
  /// curves[i][j] = KL(candidate i || p_{lambdas[j]})
  std::vector<std::vector<double>> curves;
  /// Crossing of the pi3 / pi4 curves from the validity/KL decomposition.
  double crossing_lambda = 0.0;
  /// Same crossing located by bisection on the directly computed curves.
  double crossing_lambda_numeric = 0.0;
};

/// a = (0.10, 0.22, 0.18, 0.25, 0.25), Y1 = first three outcomes; candidates
/// p*, delta_{y1}, pi3 = 0.93 p* + 0.07 nu0, pi4 = (0.05, 0.05, 0.88, 0.01, 0.01).
OrderingIllustration ordering_illustration(const std::vector<double>& lambdas);

struct BetaMuRow {
  double a1 = 0.0;
  double mu_target = 0.0;
  double lambda_required = 0.0;
  ExtendedReal beta_required = ExtendedReal::infinity();
  double kappa_cost = 0.0;
};

std::vector<BetaMuRow> beta_mu_table(const std::vector<double>& a1_values,
                                     const std::vector<double>& mu_targets);

struct GeometryRow {
  double a1 = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double kappa = 0.0;
  double log_partition = 0.0;
  double tvd_pstar = 0.0;  ///< closed form
  double fkl_pstar = 0.0;  ///< closed form
  ExtendedReal rkl_pstar = ExtendedReal::infinity();
  double tvd_numeric = 0.0;
  double fkl_numeric = 0.0;
};

/// Binary family with valid mass A1 (four outcomes, two valid) along a lambda grid.
TiltedFamily binary_family(double a1);
std::vector<GeometryRow> geometry_profile(const std::vector<double>& a1_values,
                                          const std::vector<double>& lambdas);

struct A1Estimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;
  std::size_t batch = 0;
};

/// Monte Carlo estimate of a(Y1) from `batch` inverse-CDF samples.
A1Estimate estimate_a1(const BinaryVerifier& verifier, const FiniteDistribution& base,
                       std::size_t batch, SeededRng& rng);

/// Top-k outcomes by probability, ties broken by canonical order.
std::vector<SequenceProb> top_sequences(const FiniteDistribution& dist, std::size_t k);
std::vector<SequenceProb> top_sequences_table(const SweepRecord& record,
                                              const std::vector<std::string>& labels,
                                              std::size_t k);

struct TvdDipReport {
  bool dip_present = false;
  double argmin_lambda = 0.0;
  bool fkl_monotone = false;
  /// Largest single-step decrease of the forward KL along the grid.
  double worst_fkl_drop = 0.0;
};

/// A dip is an interior global TVD minimum at lambda in [1, 8]. Needs a
/// cold-start grid covering [1, 20] with at least 8 points.
TvdDipReport tvd_dip_diagnostic(const SeedSummary& summary, double fkl_step_tolerance = 1e-6);

}  // namespace klgeo
