#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/geometry.hpp"
#include "coxbayes/wavelet.hpp"

namespace coxbayes {

/// Closed-form test intensities of s, where s is the mean of the coordinates of z.
///  constant: c
///  linear:   c + b s
///  step:     c for s < z0, b for s >= z0
///  kink:     c + b |s - z0|
///  sine:     c + b sin(2 pi s)
struct AnalyticIntensity {
  enum class Kind { Constant, Linear, Step, Kink, Sine };
  Kind kind = Kind::Constant;
  double c = 1.0;
  double b = 0.0;
  double z0 = 0.5;

  double operator()(std::span<const double> z) const;
  std::string name() const;
};

AnalyticIntensity::Kind analytic_kind_from_string(const std::string& name);

/// rho(z) = rho* prod_{l<=L} Y_{eps_l(z)} with node factors stored by node id.
struct TreeIntensity {
  double rho_star = 1.0;
  std::vector<double> ybar;  // Ybar_eps, root entry 1
  std::vector<double> y;     // Y_eps = Ybar_eps / alpha_n(eps), 1 on frozen nodes
  std::vector<bool> spike;   // node drawn from the spike (or frozen)
};

struct TreePiecewise {
  std::shared_ptr<const PartitionTree> tree;
  TreeIntensity factors;
};

struct LinkedWavelet {
  WaveletState state;
};

/// Intensity function of the covariate value.
class IntensityFn {
 public:
  using Repr = std::variant<AnalyticIntensity, TreePiecewise, LinkedWavelet>;

  IntensityFn(AnalyticIntensity f) : repr_(std::move(f)) {}
  IntensityFn(TreePiecewise f) : repr_(std::move(f)) {}
  IntensityFn(LinkedWavelet f) : repr_(std::move(f)) {}

  double operator()(std::span<const double> z) const;
  const Repr& repr() const { return repr_; }

 private:
  Repr repr_;
};

double eval_tree(const PartitionTree& tree, const TreeIntensity& t, std::span<const double> z);

}  // namespace coxbayes
