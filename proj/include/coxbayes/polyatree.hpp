#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/geometry.hpp"
#include "coxbayes/intensity.hpp"
#include "coxbayes/pointproc.hpp"

namespace coxbayes {

/// Spike-and-slab Polya tree hyperparameters. Per-level vectors are indexed by
/// the level l of the node eps whose children eps-, eps+ are being split
/// (l = 0 .. Ln-1). Levels l >= L0 use the spike-and-slab law, shallower levels
/// a plain Beta(beta1[l], beta2[l]).
struct PolyaHyper {
  int L0 = 2;
  int Ln = 1;
  std::vector<double> alpha;  // slab concentration alpha_eps
  std::vector<double> q;      // spike weight q_eps
  std::vector<double> beta1;
  std::vector<double> beta2;
  double rho_shape = 1.0;  // Gamma(a, b) prior on rho*
  double rho_rate = 1.0;

  /// alpha = 1, q = 1 - 2^{-t0 l} clamped into [0.5, 1 - 2^-20], Beta(1,1) above L0, Gamma(1,1).
  static PolyaHyper defaults(int Ln, int L0 = 2, double t0 = 1.0);
  /// Throws DomainError naming the offending field.
  void validate() const;
};

/// Depth with 2^Ln = floor(delta n / log n), at least 1.
int default_depth(double n, double delta = 0.1);

struct HyperCheck {
  bool spike_floor = false;      // q >= c2 on levels >= L0
  bool sparsity = false;         // (1-q) alpha <= 2^{-l t}
  double worst_sparsity_ratio = 0.0;  // max over levels of (1-q) alpha 2^{l t}
  double max_alpha_2l_over_n = 0.0;   // alpha 2^l / n, should be small
};

HyperCheck check_hyper(const PolyaHyper& hyper, double n, double t = 1.0, double c2 = 0.5);

struct NodePosterior {
  double alpha_left = 0.5;  // alpha_n(eps-), the spike location for Ybar_eps-
  double spike_prob = 0.0;  // 0 for plain Beta nodes, 1 for frozen nodes
  double a = 1.0;           // Beta parameters of Ybar_eps-
  double b = 1.0;
  bool frozen = false;
  bool spike_slab = false;
};

struct PolyaPosterior {
  int dim_d = 1;
  int max_level = 1;
  double n = 0.0;
  std::uint64_t total_count = 0;
  double rho_shape = 1.0;
  double rho_rate = 1.0;
  std::vector<NodePosterior> nodes;  // internal nodes by id

  double rho_star_mean() const { return rho_shape / rho_rate; }
};

/// log of the slab-vs-spike Bayes factor at one node.
double log_bayes_factor(double n_left, double n_right, double alpha_left, double q, double concentration);
double spike_probability(double n_left, double n_right, double alpha_left, double q, double concentration);

PolyaPosterior exact_posterior(const NodeCounts& counts, const PushforwardMass& mass, const PolyaHyper& hyper,
                               double n);

TreeIntensity sample_tree(const PolyaPosterior& post, Rng& rng);
std::vector<TreeIntensity> posterior_sample(const PolyaPosterior& post, std::size_t count, std::uint64_t seed);
TreeIntensity prior_sample(const PartitionTree& tree, const PushforwardMass& mass, const PolyaHyper& hyper,
                           std::uint64_t seed);

/// E[Y_eps] for a node under the posterior (product of these along a path gives the posterior mean).
double posterior_mean_factor(const PolyaPosterior& post, NodeIndex node);
double posterior_mean_at(const PolyaPosterior& post, const PartitionTree& tree, std::span<const double> z0);

/// Independent posterior draws of rho(z0).
std::vector<double> pointwise_draws(const PolyaPosterior& post, const PartitionTree& tree, std::span<const double> z0,
                                    std::size_t draws, std::uint64_t seed);

struct PointwiseSummary {
  double mean = 0.0;
  std::vector<double> levels;
  std::vector<double> quantiles;
};

/// Monte Carlo summary of rho(z0), drawing only the nodes on the path of z0.
PointwiseSummary pointwise_summary(const PolyaPosterior& post, const PartitionTree& tree,
                                   std::span<const double> z0, std::size_t draws, std::span<const double> levels,
                                   std::uint64_t seed);

struct TruthCoefficients {
  std::vector<double> rho0_node;  // rho_0(eps) by node id
  std::vector<double> y0;         // y0_eps by node id (root 1)
  std::vector<NodeIndex> path;
  std::vector<double> path_y0;
  std::vector<double> threshold;  // gamma sqrt(log n / (n rho_0(eps)))
  std::vector<int> significant;   // L(gamma)
};

TruthCoefficients truth_coefficients(const IntensityFn& rho0, const CovariateField& field,
                                     const PartitionTree& tree, const PushforwardMass& mass,
                                     std::span<const double> z0, double gamma);

/// |N| log rho* - rho* n + sum_eps N_eps log Y_eps.
double factorized_log_likelihood(const TreeIntensity& t, const NodeCounts& counts, double n);

void save_posterior(const PolyaPosterior& post, const std::filesystem::path& path);
PolyaPosterior load_posterior(const std::filesystem::path& path);

}  // namespace coxbayes
