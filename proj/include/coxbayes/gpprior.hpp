#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/pointproc.hpp"
#include "coxbayes/rng.hpp"
#include "coxbayes/wavelet.hpp"

namespace coxbayes {

/// Pi_L(L = l) proportional to exp(-C_L 2^{ld} l) on {l_min, ..., l_max}.
struct LevelPrior {
  double c_l = 1.0;
  int dim_d = 1;
  int l_min = 1;
  int l_max = 1;

  double log_weight(int l) const;
  double log_mass(int l) const;
  std::vector<double> probabilities() const;
};

WaveletState prior_sample_wavelet(std::shared_ptr<const WaveletBasis> basis, double alpha, int level, LinkFn link,
                                  std::uint64_t seed);

double eval_rho(const WaveletState& state, std::span<const double> z);

/// Grid log-likelihood of rho_W given a field and a pattern, cached as a list of
/// atoms (covariate point, window volume, point count). For the Haar basis the
/// atoms are the dyadic bins of the finest level, on which every basis function
/// is constant, so the result is exact. Otherwise each grid cell is an atom.
/// An empty target is the constant likelihood 0. Safe to share read-only.
class WaveletTarget {
 public:
  WaveletTarget() = default;
  WaveletTarget(std::shared_ptr<const WaveletBasis> basis, const CovariateField& field, const PointPattern& pattern);

  static WaveletTarget constant() { return {}; }
  bool is_constant() const { return atoms_ == 0; }
  std::size_t atom_count() const { return atoms_; }

  double log_likelihood(const WaveletState& state) const;

 private:
  std::shared_ptr<const WaveletBasis> basis_;
  std::size_t atoms_ = 0;
  std::vector<double> volume_;
  std::vector<double> count_;
  std::vector<std::size_t> term_start_;
  std::vector<BasisTerm> terms_;
};

struct ChainRecord {
  std::size_t iter = 0;
  int level = 1;
  double log_likelihood = 0.0;
  bool accepted = false;
};

struct PcnOptions {
  double beta = 0.5;
  std::size_t iters = 1000;
  std::size_t burn_in = 0;
  bool adapt = true;           // double/halve beta during burn-in towards acceptance in [0.15, 0.4]
  std::size_t adapt_window = 50;
  std::size_t thin = 10;       // keep a state every `thin` iterations after burn-in
  std::optional<LevelPrior> level_prior;  // run a level move after every pCN step when set
  std::size_t snapshot_every = 0;         // coefficient snapshots (0 = none)
};

struct ChainResult {
  std::vector<ChainRecord> records;
  std::vector<WaveletState> samples;
  std::vector<std::pair<std::size_t, WaveletState>> snapshots;
  WaveletState final_state;
  double beta = 0.0;
  double acceptance_rate = 0.0;  // after burn-in
  std::size_t level_moves_accepted = 0;
};

/// Preconditioned Crank-Nicolson chain: g' = sqrt(1 - beta^2) g + beta xi, accepted with
/// probability min(1, exp(loglik' - loglik)).
ChainResult pcn_chain(const WaveletState& init, const WaveletTarget& target, const PcnOptions& options,
                      std::uint64_t seed);

/// Birth/death move on the top level. Returns true if accepted; `loglik` holds the
/// log-likelihood of `state` and is updated on acceptance.
bool level_move(WaveletState& state, const LevelPrior& prior, const WaveletTarget& target, double& loglik, Rng& rng);

/// JSON lines `<dir>/chain.jsonl` and binary snapshots `<dir>/snapshots.bin`.
void save_chain(const ChainResult& result, const std::filesystem::path& dir);

}  // namespace coxbayes
