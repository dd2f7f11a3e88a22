// Invariant battery behind `klgeo check` and `klgeo gradcheck`. Every check
// lives in one registry, so the command and the tests see the same list.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "klgeo/tilted_family.hpp"

namespace klgeo {

struct CheckContext {
  std::uint64_t seed = 1;
  /// Replaces every check's default tolerance when set.
  std::optional<double> tolerance;
  double gradcheck_h = 1e-5;
  std::size_t gradcheck_policies = 5;
  /// Inverse moment map under test; swap in a faulty version to exercise the harness.
  std::function<double(const TiltedFamily&, const MomentCoordinate&)> natural_param =
      [](const TiltedFamily& fam, const MomentCoordinate& c) { return klgeo::natural_param(fam, c); };
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct CheckSpec {
  std::string name;
  std::string description;
  double default_tolerance = 0.0;
  std::function<CheckResult(const CheckContext&, double tolerance)> run;
};

const std::vector<CheckSpec>& check_registry();

/// Runs the registered checks whose name starts with `prefix` (all when empty).
/// A check that throws is reported as failed with the exception text.
std::vector<CheckResult> run_checks(const CheckContext& ctx, const std::string& prefix = "");

/// Fixed-width pass/fail table, one line per check.
std::string format_check_table(const std::vector<CheckResult>& results);

}  // namespace klgeo
