#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace klgeo {

/// Deterministic generator: mt19937_64 uniforms, Gaussians by the Box-Muller
/// transform of uniform pairs. The output stream depends only on the seed.
class SeededRng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+box-muller";

  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Gaussian with the given mean and standard deviation.
  double gaussian(double mean = 0.0, double stddev = 1.0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Independent child seed for the counter-th task derived from a master seed
/// (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

}  // namespace klgeo
