// Run configuration in a flat `key = value` text format.
//
//   # comment
//   seeds = 1, 2, 3        (ranges like 1..8 are accepted for seeds)
//   lambdas = 0.5, 1, 50
//   ascent.steps = 8000
//
// Unknown keys are rejected; parse errors carry line and column.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "klgeo/experiments.hpp"

namespace klgeo {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& message, std::size_t line = 0, std::size_t column = 0);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct OptimizerSettings {
  double learning_rate = 0.1;
  std::size_t steps = 8000;
  std::size_t restarts = 1;
  /// 0 disables the decay schedule.
  std::size_t decay_every = 0;
  double decay_factor = 0.5;
  double init_stddev = 1.0;

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

struct RunConfig {
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds = {1};
  std::vector<double> lambdas = default_lambda_grid();
  FamilyOrder order = FamilyOrder::bigram;
  bool plots = false;
  bool warm_start = false;
  double warm_from_lambda = 3.0;
  std::size_t threads = 1;

  std::size_t vocab_size = 3;
  std::size_t length = 3;
  double sigma = 0.5;
  bool sigma_is_variance = false;
  std::size_t top_k = 5;
  bool references = true;

  OptimizerSettings ascent{0.1, 8000, 1, 0, 0.5, 1.0};
  OptimizerSettings fkl{0.05, 15000, 1, 0, 0.5, 1.0};
  OptimizerSettings tvd{0.1, 5000, 200, 1000, 0.5, 1.0};

  std::vector<double> geometry_a1 = {0.1, 0.35, 0.5, 0.9};
  std::vector<double> geometry_lambdas = {-10, -5, -2, -1, 0, 0.5, 1, 2, 3, 5, 10, 20, 40};
  std::vector<double> betamu_a1 = {0.1, 0.5, 0.9};
  std::vector<double> betamu_mu = {0.5, 0.9, 0.99};
  std::vector<double> ordering_lambdas = {0, 0.5, 1, 2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 50};
  std::size_t a1_batch = 10000;

  /// Overrides every check's default tolerance when set.
  std::optional<double> tolerance;
  double gradcheck_h = 1e-5;
  std::size_t gradcheck_policies = 5;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Range and consistency checks; throws ConfigError.
  void validate() const;
  SweepConfig sweep_config() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Every key, one per line, in a fixed order. parse_config inverts it.
std::string serialize_config(const RunConfig& cfg);

/// Apply a single key/value pair (the same keys as the file format).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

std::vector<double> parse_double_list(const std::string& text);
/// Comma-separated integers and inclusive ranges `a..b`.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace klgeo
