#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coxbayes/link.hpp"

namespace coxbayes {

enum class WaveletFamily { Haar, Daubechies4 };

std::string to_string(WaveletFamily family);
WaveletFamily wavelet_family_from_string(const std::string& name);

/// One nonzero basis function value at a point.
struct BasisTerm {
  std::uint32_t index;
  double value;
};

/// Tensor-product wavelet basis on [0,1]^d. In one dimension index 0 is the
/// constant and index 2^j + k is psi_{j,k}, which sits on level j + 1 (the
/// constant shares level 1). A tensor index lives on the maximum of its axis
/// levels. Coefficients are stored level by level, so truncation at level L
/// keeps the first 2^{Ld} of them.
class WaveletBasis {
 public:
  WaveletBasis(WaveletFamily family, int dim_d, int max_level);

  WaveletFamily family() const { return family_; }
  int dim() const { return dim_; }
  int max_level() const { return max_level_; }

  /// Number of coefficients with level <= `level`.
  std::size_t count(int level) const;
  int level_of(std::size_t index) const { return levels_[index]; }
  /// Per-axis 1-d indices of a coefficient.
  std::span<const std::uint32_t> axis_indices(std::size_t index) const {
    return {tuples_.data() + index * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  /// All basis functions of level <= `level` that are nonzero at z.
  void evaluate(std::span<const double> z, int level, std::vector<BasisTerm>& out) const;
  double value(std::size_t index, std::span<const double> z) const;
  /// One-dimensional basis function `index` at x in [0,1].
  double value_1d(std::uint32_t index, double x) const;

 private:
  void axis_terms(double x, int level, std::vector<BasisTerm>& out) const;

  WaveletFamily family_;
  int dim_;
  int max_level_;
  std::vector<std::uint32_t> position_;  // lexicographic tuple -> storage position
  std::vector<std::uint32_t> tuples_;    // storage position -> tuple
  std::vector<int> levels_;
};

inline constexpr std::size_t kMaxWaveletCoefficients = std::size_t{1} << 18;

/// Largest level whose coefficient count 2^{Ld} stays within the cap.
int max_wavelet_level(int dim_d);

/// Truncated Gaussian wavelet series W(z) = sum_{l<=L} sum_k 2^{-l(alpha+d/2)} g_lk psi_lk(z)
/// composed with a link, rho_W = eta(W).
struct WaveletState {
  std::shared_ptr<const WaveletBasis> basis;
  double alpha = 1.0;
  int level = 1;
  std::vector<double> coefficients;  // g_lk, count(level) of them
  LinkFn link;

  double scale(std::size_t index) const;
  double field(std::span<const double> z) const;
  double rho(std::span<const double> z) const { return link(field(z)); }
};

/// Prior variance of W(z): sum 2^{-2l(alpha+d/2)} psi_lk(z)^2.
double prior_variance(const WaveletBasis& basis, double alpha, int level, std::span<const double> z);

}  // namespace coxbayes
