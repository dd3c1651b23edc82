#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/geometry.hpp"
#include "coxbayes/intensity.hpp"

namespace coxbayes {

struct PointPattern {
  Grid grid;
  std::vector<double> coords;             // point_count x D
  std::vector<std::size_t> cell_of_point;
  std::vector<std::uint64_t> cell_counts;  // per grid cell
  std::uint64_t seed = 0;

  std::size_t size() const { return cell_of_point.size(); }
  std::span<const double> point(std::size_t i) const {
    const auto d = static_cast<std::size_t>(grid.dim());
    return {coords.data() + i * d, d};
  }
};

/// N_eps for every node of a partition tree, by node id.
struct NodeCounts {
  int max_level = 1;
  std::vector<std::uint64_t> counts;

  std::uint64_t operator[](NodeIndex node) const { return counts[node.id()]; }
  std::uint64_t total() const { return counts.empty() ? 0 : counts[0]; }
  NodeCounts& operator+=(const NodeCounts& other);
};

/// lambda(cell) = rho(Z(cell)); throws InvariantError on a negative or non-finite value.
std::vector<double> intensity_raster(const IntensityFn& rho, const CovariateField& field);

/// Independent Poisson(lambda(cell) * cell_volume) counts, points uniform within cells.
PointPattern sample_cox(std::span<const double> raster, const Grid& grid, std::uint64_t seed);

/// Builds a pattern from explicit coordinates.
PointPattern make_pattern(const Grid& grid, std::vector<double> coords, std::uint64_t seed = 0);

struct LogLikelihood {
  double value = 0.0;
  bool zero_intensity_at_point = false;
};

/// sum_i log rho(Z(x_i)) - sum_cells rho(Z(cell)) cell_volume; -inf if rho vanishes at a point.
LogLikelihood log_likelihood(const IntensityFn& rho, const CovariateField& field, const PointPattern& pattern);
LogLikelihood log_likelihood(std::span<const double> raster, const Grid& grid, const PointPattern& pattern);

NodeCounts bin_counts(const PointPattern& pattern, const CovariateField& field, const PartitionTree& tree);

/// `<stem>.csv` (one row per point) and `<stem>.json` (seed, window, grid, generator hash).
void save_pattern(const PointPattern& pattern, const std::filesystem::path& stem,
                  const std::string& generator_hash = "");
PointPattern load_pattern(const std::filesystem::path& stem);

}  // namespace coxbayes
