#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coxbayes/geometry.hpp"
#include "coxbayes/rng.hpp"

namespace coxbayes {

enum class KernelFamily {
  SquaredExponential,  // exp(-r^2 / (2 s^2))
  Exponential,         // exp(-r / s)
  Cauchy,              // (1 + (r/s)^2)^(-tail/2), integrable over R^D when tail > D
};

/// Stationary isotropic covariance normalized so that K(0) = 1.
struct CovarianceKernel {
  KernelFamily family = KernelFamily::SquaredExponential;
  double length_scale = 1.0;
  double tail_exponent = 4.0;

  double operator()(double distance) const;
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

enum class Transform { Identity, NormalCdf };

/// Law of the i.i.d. tessellation marks, applied independently per component.
struct MarkLaw {
  enum class Kind { Uniform, Discrete };
  Kind kind = Kind::Uniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<double> values;
  std::vector<double> probs;

  double mean() const;
  double sample(Rng& rng) const;
};

/// Stationary (one-point) law nu of the covariate field.
struct UniformBoxMeasure {
  double low = 0.0;
  double high = 1.0;
};
struct DiscreteMeasure {
  std::vector<double> values;
  std::vector<double> probs;
};
struct StandardNormalMeasure {};
using StationaryMeasure = std::variant<UniformBoxMeasure, DiscreteMeasure, StandardNormalMeasure>;

struct GaussianGenerator {
  std::vector<CovarianceKernel> kernels;
  Transform transform = Transform::Identity;
  std::string method;  // "circulant", "cholesky" or "trivial"
};
struct VoronoiGenerator {
  double rate = 1.0;
  MarkLaw marks;
  double margin = 0.0;
  int retries = 0;
  std::size_t seed_count = 0;
};
struct ExplicitGenerator {};
using GeneratorDescriptor = std::variant<GaussianGenerator, VoronoiGenerator, ExplicitGenerator>;

/// Grid-sampled covariate field; Z is piecewise constant over grid cells.
struct CovariateField {
  Grid grid;
  int dim_d = 1;
  std::vector<double> values;  // cell_count x dim_d, row-major
  GeneratorDescriptor generator = ExplicitGenerator{};
  StationaryMeasure nu = UniformBoxMeasure{};
  std::uint64_t seed = 0;

  std::size_t cell_count() const { return grid.cell_count(); }
  std::span<const double> at(std::size_t cell) const {
    return {values.data() + cell * static_cast<std::size_t>(dim_d), static_cast<std::size_t>(dim_d)};
  }
  /// Volume of the observation window, n.
  double n() const { return grid.window().volume; }
};

/// Builds a field from explicit per-cell values (row-major, cell_count x dim_d).
CovariateField make_field(const Grid& grid, int dim_d, std::vector<double> values, StationaryMeasure nu);

/// Exact sampler for one stationary centred unit-variance Gaussian field on a
/// grid: circulant embedding of the covariance on a padded torus, with an
/// LDLT factorization fallback for grids of at most 4096 points.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const Grid& grid, const CovarianceKernel& kernel);
  ~GaussianFieldSampler();
  GaussianFieldSampler(GaussianFieldSampler&&) noexcept;
  GaussianFieldSampler& operator=(GaussianFieldSampler&&) noexcept;

  /// Writes one draw to out[i * stride] for every cell i.
  void sample(Rng& rng, std::span<double> out, std::size_t stride = 1) const;
  const std::string& method() const;
  /// Per-axis size of the periodic embedding (0 when not circulant).
  std::size_t embedding_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr std::size_t kCholeskyLimit = 4096;
inline constexpr double kEmbeddingTolerance = 1e-10;

CovariateField sample_gaussian_field(const Grid& grid, std::span<const CovarianceKernel> kernels,
                                     std::uint64_t seed);
/// Same as above but reusing prebuilt samplers (one per component).
CovariateField sample_gaussian_field(const Grid& grid, std::span<const GaussianFieldSampler> samplers,
                                     std::span<const CovarianceKernel> kernels, std::uint64_t seed);

double normal_cdf(double x);

/// Componentwise standard normal CDF. The stationary measure becomes uniform on [0,1]^d.
CovariateField transform_cdf(CovariateField raw);

/// Voronoi tessellation of a finite seed set with one mark per seed.
/// Nearest-seed queries go through a uniform bucket grid.
class VoronoiTessellation {
 public:
  VoronoiTessellation(int dim, std::vector<double> seeds, std::vector<double> lower,
                      std::vector<double> upper, double bucket_size);

  std::size_t seed_count() const { return count_; }
  /// Index of the nearest seed; ties go to the lowest index.
  std::size_t nearest(std::span<const double> x) const;

 private:
  int dim_;
  std::size_t count_;
  std::vector<double> seeds_;
  std::vector<double> lower_;
  double bucket_size_;
  std::vector<std::size_t> buckets_per_axis_;
  std::vector<std::size_t> bucket_start_;
  std::vector<std::size_t> bucket_items_;
};

double default_voronoi_margin(double rate, int window_dim, std::size_t cell_count);

/// Poisson-Voronoi covariate field: seeds of the given rate on the window
/// dilated by `margin`, each cell taking the mark of its nearest seed.
CovariateField sample_voronoi_field(const Grid& grid, double rate, const MarkLaw& marks, int dim_d,
                                    std::optional<double> margin, std::uint64_t seed);

/// mu_n(B_eps) for every node of a partition tree: the fraction of window
/// volume whose covariate value lies in B_eps.
struct PushforwardMass {
  int dim_d = 1;
  int max_level = 1;
  std::vector<std::uint64_t> cell_counts;  // by node id
  std::uint64_t total_cells = 0;
  std::vector<double> mass;  // by node id

  double operator[](NodeIndex node) const { return mass[node.id()]; }
  /// alpha_n(eps) = mu_n(B_eps) / mu_n(B_P(eps)); NaN when the parent has zero mass.
  double alpha(NodeIndex node) const;
  bool is_zero(NodeIndex node) const { return cell_counts[node.id()] == 0; }
};

PushforwardMass pushforward(const CovariateField& field, const PartitionTree& tree);

/// nu(B) for the stationary measure (uniform box or discrete marks).
double stationary_mass(const StationaryMeasure& nu, const Box& box, int dim_d);

struct NodeDiagnostic {
  NodeIndex node;
  double mass = 0.0;
  double alpha = 0.0;
  bool alpha_ok = false;
  bool mass_ok = false;
  double nu_mass = 0.0;
  double deviation = 0.0;  // |mu_n(B) - nu(B)|
  double envelope = 0.0;   // M_n sqrt(nu(B) log n / n)
};

struct DiagnosticsReport {
  std::vector<NodeDiagnostic> nodes;  // path nodes and their twins, by level
  std::vector<double> min_alpha;      // per level 1..L, worst case over path and twin
  std::vector<double> max_alpha;
  std::vector<double> min_scaled_mass;  // per level, 2^l mu_n(B) minimum over path and twin
  double c1 = 0.0;
  double Cd = 0.0;
  bool alpha_pass = false;
  bool mass_pass = false;
  bool pass = false;
  double max_deviation_ratio = 0.0;  // max deviation / envelope
};

/// Checks c1 <= alpha_n <= 1 - c1 and mu_n(B) >= 2^{-l} / Cd along a path and its twins.
DiagnosticsReport diagnostics(const PushforwardMass& mass, std::span<const NodeIndex> path, double c1,
                              double Cd, const PartitionTree& tree, const StationaryMeasure& nu,
                              double n, double envelope_multiplier = 1.0);

/// Flat little-endian float64 raster `<stem>.bin` plus a JSON header `<stem>.json`.
void save_field(const CovariateField& field, const std::filesystem::path& stem);
CovariateField load_field(const std::filesystem::path& stem);

}  // namespace coxbayes
