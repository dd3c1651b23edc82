#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/gpprior.hpp"
#include "coxbayes/intensity.hpp"
#include "coxbayes/polyatree.hpp"

namespace coxbayes {

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  double stderr_intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x. Needs >= 3 points and distinct x.
SlopeFit fit_slope(std::span<const double> x, std::span<const double> y);

/// Weighted pool-adjacent-violators fit, nonincreasing.
std::vector<double> isotonic_nonincreasing(std::span<const double> y, std::span<const double> w = {});

/// Covariate family shared by the experiments and the CLI.
struct CovariateSpec {
  enum class Family { GaussianCdf, GaussianRaw, Voronoi };
  Family family = Family::GaussianCdf;
  int window_dim = 1;
  int dim_d = 1;
  double spacing = 0.5;
  std::vector<CovarianceKernel> kernels{CovarianceKernel{}};  // one per component, or one shared
  double voronoi_rate = 1.0;
  MarkLaw marks;
  std::optional<double> margin;

  StationaryMeasure stationary_measure() const;
};

std::string to_string(CovariateSpec::Family family);

/// Simulates fields of one size, reusing the Gaussian synthesis setup across seeds.
class CovariateSimulator {
 public:
  CovariateSimulator(const CovariateSpec& spec, double n);
  CovariateField sample(std::uint64_t seed) const;
  const Grid& grid() const { return grid_; }

 private:
  CovariateSpec spec_;
  Grid grid_;
  std::vector<CovarianceKernel> kernels_;
  std::vector<GaussianFieldSampler> samplers_;
};

enum class RateModel { Polya, Gp };
enum class LossKind { EmpiricalL1, L1Nu, Pointwise };

std::string to_string(RateModel m);
std::string to_string(LossKind k);

struct PolyaSettings {
  int L0 = 2;
  double delta = 0.1;
  std::optional<int> depth;
  double alpha = 1.0;
  double spike_decay = 1.0;  // t0 in 1 - q_l = 2^{-t0 l}
  std::optional<double> q;   // constant spike weight, overrides spike_decay
  double rho_shape = 1.0;
  double rho_rate = 1.0;
  std::size_t draws = 200;
};

struct GpSettings {
  WaveletFamily family = WaveletFamily::Haar;
  double alpha = 1.0;
  std::optional<int> level;  // default ceil(log2 n^{1/(2 alpha + d)})
  LinkFn link;
  PcnOptions pcn;
  std::optional<double> level_prior_c;  // hierarchical level prior when set
  std::size_t quad_points = 4096;
};

struct RateExperiment {
  RateModel model = RateModel::Polya;
  AnalyticIntensity truth;
  double beta = 1.0;  // smoothness of the truth
  CovariateSpec covariates;
  std::vector<double> n_grid;
  std::size_t replicates = 10;
  LossKind loss = LossKind::Pointwise;
  std::vector<double> z0{0.5};
  std::uint64_t seed = 1;
  int threads = 1;
  PolyaSettings polya;
  GpSettings gp;

  /// -beta/(2 beta + d); for the GP prior the smoothness is min(alpha, beta).
  double theoretical_exponent() const;
  void validate() const;
};

struct RateRow {
  double n = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double loss = 0.0;
  bool failed = false;
  std::string error;
  std::size_t points = 0;
  double extra = 0.0;  // model detail: tree depth or chain acceptance rate
};

struct RateResult {
  std::vector<RateRow> rows;
  std::vector<double> n_grid;
  std::vector<double> mean_loss;
  std::size_t failures = 0;
  SlopeFit fit;
  double exponent = 0.0;
};

/// Loss of one replicate (exposed for tests and the CLI).
RateRow run_rate_replicate(const RateExperiment& exp, std::size_t n_index, std::size_t replicate);
RateResult run_rate(const RateExperiment& exp);

enum class TailFunctional { CenteredIdentity, Zero };

struct TailExperiment {
  CovariateSpec covariates;
  TailFunctional functional = TailFunctional::CenteredIdentity;
  std::vector<double> n_grid;
  std::vector<double> r_grid;  // at n_grid[0]; chosen from the data when empty
  bool scale_r = true;         // r at n is r * sqrt(n_grid[0] / n)
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct TailRow {
  double n = 0.0;
  double r = 0.0;
  double exceed_raw = 0.0;
  double exceed_smooth = 0.0;
  std::size_t hits = 0;
};

struct TailFit {
  double n = 0.0;
  double rate = 0.0;  // minus the slope of log P against r^2 (or min(r, r^2))
  SlopeFit fit;
};

struct TailResult {
  std::vector<TailRow> rows;
  std::vector<TailFit> fits;
  std::vector<double> rate_ratio_error;  // |rate(n_{i+1}) / rate(n_i) / (n_{i+1} / n_i) - 1|
  double min_r_squared = 0.0;
  double max_ratio_error = 0.0;
  std::vector<std::vector<double>> statistics;  // X_f per n, per replicate
};

double tail_functional(TailFunctional f, std::span<const double> z);
TailResult run_tails(const TailExperiment& exp);

struct ErgodicExperiment {
  CovariateSpec covariates;
  AnalyticIntensity rho;
  AnalyticIntensity rho0;
  std::vector<double> n_grid;
  std::size_t replicates = 50;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ErgodicResult {
  std::vector<double> n_grid;
  std::vector<double> mean_gap;
  std::vector<std::vector<double>> gaps;
  SlopeFit fit;
};

ErgodicResult run_ergodic(const ErgodicExperiment& exp);

struct Condition5Experiment {
  CovariateSpec covariates;
  double n = 4096;
  double delta = 0.1;
  std::optional<int> depth;
  double c1 = 0.1;
  std::optional<double> cd;
  std::vector<double> z0{0.5};
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct Condition5Result {
  int depth = 0;
  std::size_t passes = 0;
  std::size_t replicates = 0;
  std::vector<bool> pass;
  std::vector<double> min_alpha;
  std::vector<double> max_deviation_ratio;
};

Condition5Result run_condition5(const Condition5Experiment& exp);

void write_rate_csv(const RateResult& r, const std::filesystem::path& path);
void write_tail_csv(const TailResult& r, const std::filesystem::path& path);
void write_ergodic_csv(const ErgodicResult& r, const std::filesystem::path& path);

}  // namespace coxbayes
