#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coxbayes/bench.hpp"
#include "coxbayes/io.hpp"

namespace coxbayes {

struct ConfigViolation {
  std::string path;  // JSON pointer
  std::string message;
};

/// Acceptance thresholds applied under --check.
struct CheckThresholds {
  double slope_tolerance = 0.15;
  double min_r_squared = 0.9;
  double max_ratio_error = 0.25;
  double min_pass_rate = 0.95;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  int threads = 1;
  double n = 1024;
  std::vector<double> n_grid;
  std::size_t replicates = 1;
  CovariateSpec covariates;
  AnalyticIntensity truth;
  AnalyticIntensity truth_alt;  // second intensity of the ergodic gap
  double truth_beta = 1.0;
  std::string model = "polya";
  LossKind loss = LossKind::Pointwise;
  std::vector<double> z0{0.5};
  PolyaSettings polya;
  GpSettings gp;
  TailFunctional functional = TailFunctional::CenteredIdentity;
  std::vector<double> r_grid;
  bool scale_r = true;
  double c1 = 0.1;
  std::optional<double> cd;
  std::optional<std::string> input;
  CheckThresholds check;
};

inline const std::vector<std::string> kCommands = {"simulate", "fit-polya", "fit-gp", "rates",
                                                   "tails",    "diagnose",  "ergodic"};

/// Every schema violation in the document (empty when valid).
std::vector<ConfigViolation> validate_config(const Json& j);
/// Parses a valid document; throws ConfigError with the first violation otherwise.
RunConfig parse_config(const Json& j);

RateExperiment rate_experiment(const RunConfig& c);
TailExperiment tail_experiment(const RunConfig& c);
ErgodicExperiment ergodic_experiment(const RunConfig& c);
Condition5Experiment condition5_experiment(const RunConfig& c);

}  // namespace coxbayes
