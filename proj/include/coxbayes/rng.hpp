#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace coxbayes {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a list of counters
/// (e.g. experiment index, n index, replicate index).
std::uint64_t stream_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters);

/// Random source used throughout the library. Deterministic given the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double uniform();  // [0, 1)
  double uniform_open();  // (0, 1)
  double normal();
  bool bernoulli(double p);
  std::uint64_t poisson(double mean);
  double gamma(double shape, double rate);
  /// log of a Gamma(shape, 1) variate; accurate for very small shapes.
  double log_gamma_variate(double shape);
  double beta(double a, double b);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace coxbayes
