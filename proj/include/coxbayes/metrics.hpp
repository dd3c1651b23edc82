#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/intensity.hpp"

namespace coxbayes {

/// Nodes and weights integrating against nu: a midpoint grid for a uniform box,
/// the atoms themselves for discrete marks.
struct Quadrature {
  int dim_d = 1;
  std::vector<double> points;  // size x dim_d
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(dim_d), static_cast<std::size_t>(dim_d)};
  }
};

inline constexpr std::size_t kDefaultQuadPoints = std::size_t{1} << 16;
inline constexpr std::size_t kMaxQuadTotal = std::size_t{1} << 20;

/// Throws DomainError for measures without a quadrature (standard normal).
Quadrature make_quadrature(const StationaryMeasure& nu, int dim_d, std::size_t points_per_axis = kDefaultQuadPoints);

/// (1/n) sum_cells |rho(Z) - rho0(Z)| cell_volume.
double empirical_l1(const IntensityFn& rho, const IntensityFn& rho0, const CovariateField& field);
double empirical_l1(std::span<const double> raster, std::span<const double> raster0, const Grid& grid);

double l1_nu(const IntensityFn& rho, const IntensityFn& rho0, const StationaryMeasure& nu, int dim_d,
             std::size_t points_per_axis = kDefaultQuadPoints);
double l1_nu(std::span<const double> values, std::span<const double> values0, const Quadrature& quad);

struct KlStats {
  double kl_nu = 0.0;
  double v2_nu = 0.0;
  double mass_gap = 0.0;
  bool infinite = false;  // rho vanishes where rho0 has mass
};

KlStats kl_stats(const IntensityFn& rho, const IntensityFn& rho0, const StationaryMeasure& nu, int dim_d,
                 std::size_t points_per_axis = kDefaultQuadPoints);
KlStats kl_stats(std::span<const double> values, std::span<const double> values0, const Quadrature& quad);

struct LossReport {
  double empirical_l1 = 0.0;
  double l1_nu = 0.0;
  std::optional<double> pointwise_abs;
  double kl_nu = 0.0;
  double v2_nu = 0.0;
  double mass_gap = 0.0;
  bool kl_infinite = false;
};

/// |empirical_l1 - l1_nu| for each field.
std::vector<double> ergodic_gap(const IntensityFn& rho, const IntensityFn& rho0, std::span<const CovariateField> fields,
                                std::size_t points_per_axis = kDefaultQuadPoints);

/// Appends rows `n,seed,loss,value` (writing the header on a new file).
void append_loss_csv(const std::filesystem::path& path, double n, std::uint64_t seed, const LossReport& report);

}  // namespace coxbayes
