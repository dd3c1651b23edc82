#include "coxbayes/covariates.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

#include "coxbayes/error.hpp"

namespace coxbayes {

// ---------------------------------------------------------------------------
// kernels

double CovarianceKernel::operator()(double distance) const {
  const double r = std::abs(distance) / length_scale;
  switch (family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-0.5 * r * r);
    case KernelFamily::Exponential:
      return std::exp(-r);
    case KernelFamily::Cauchy:
      return std::pow(1.0 + r * r, -0.5 * tail_exponent);
  }
  return 0.0;
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return "squared_exponential";
    case KernelFamily::Exponential:
      return "exponential";
    case KernelFamily::Cauchy:
      return "cauchy";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "squared_exponential") return KernelFamily::SquaredExponential;
  if (name == "exponential") return KernelFamily::Exponential;
  if (name == "cauchy") return KernelFamily::Cauchy;
  throw DomainError("unknown kernel family '" + name + "'");
}

double MarkLaw::mean() const {
  if (kind == Kind::Uniform) return 0.5 * (low + high);
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

double MarkLaw::sample(Rng& rng) const {
  if (kind == Kind::Uniform) return low + (high - low) * rng.uniform();
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (u < probs[i]) return values[i];
    u -= probs[i];
  }
  return values.back();
}

CovariateField make_field(const Grid& grid, int dim_d, std::vector<double> values, StationaryMeasure nu) {
  if (values.size() != grid.cell_count() * static_cast<std::size_t>(dim_d))
    throw InvariantError("field value count does not match grid");
  CovariateField f;
  f.grid = grid;
  f.dim_d = dim_d;
  f.values = std::move(values);
  f.nu = std::move(nu);
  return f;
}

// ---------------------------------------------------------------------------
// Gaussian synthesis

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

std::size_t next_pow2(std::size_t x) {
  std::size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

}  // namespace

struct GaussianFieldSampler::Impl {
  std::string method;
  std::size_t m = 1;
  int dim = 1;
  std::size_t cells = 1;

  // circulant embedding
  std::size_t embed = 0;
  std::size_t real_size = 0;
  std::size_t complex_size = 0;
  std::vector<double> spectral_scale;  // sqrt(lambda_k) / N, half-complex layout
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  // dense fallback: x = factor * z
  Eigen::MatrixXd factor;

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  bool try_circulant(const Grid& grid, const CovarianceKernel& kernel, std::size_t size);
  void build_dense(const Grid& grid, const CovarianceKernel& kernel);
};

bool GaussianFieldSampler::Impl::try_circulant(const Grid& grid, const CovarianceKernel& kernel,
                                               std::size_t size) {
  const double h = grid.spacing();
  const std::size_t n_real = [&] {
    std::size_t t = 1;
    for (int a = 0; a < dim; ++a) t *= size;
    return t;
  }();
  const std::size_t half = size / 2 + 1;
  const std::size_t n_complex = n_real / size * half;

  auto c = fftw_buffer<double>(n_real);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t j = 0; j < n_real; ++j) {
    std::size_t rem = j;
    double r2 = 0.0;
    for (int a = dim - 1; a >= 0; --a) {
      const std::size_t i = rem % size;
      rem /= size;
      const double d = static_cast<double>(std::min(i, size - i)) * h;
      r2 += d * d;
    }
    c[j] = kernel(std::sqrt(r2));
  }
  auto spec = fftw_buffer<fftw_complex>(n_complex);
  std::vector<int> dims(dim, static_cast<int>(size));
  fftw_plan fwd;
  fftw_plan bwd;
  {
    std::lock_guard lock(fftw_planner_mutex());
    // Planning with ESTIMATE leaves the arrays untouched.
    fwd = fftw_plan_dft_r2c(dim, dims.data(), c.get(), spec.get(), FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r(dim, dims.data(), spec.get(), c.get(), FFTW_ESTIMATE);
  }
  fftw_execute_dft_r2c(fwd, c.get(), spec.get());

  double max_eig = 0.0;
  double min_eig = 0.0;
  for (std::size_t k = 0; k < n_complex; ++k) {
    max_eig = std::max(max_eig, spec[k][0]);
    min_eig = std::min(min_eig, spec[k][0]);
  }
  if (min_eig < -kEmbeddingTolerance * max_eig) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    return false;
  }
  spectral_scale.resize(n_complex);
  const double inv_n = 1.0 / static_cast<double>(n_real);
  for (std::size_t k = 0; k < n_complex; ++k)
    spectral_scale[k] = std::sqrt(std::max(spec[k][0], 0.0)) * inv_n;
  embed = size;
  real_size = n_real;
  complex_size = n_complex;
  forward = fwd;
  backward = bwd;
  method = "circulant";
  return true;
}

void GaussianFieldSampler::Impl::build_dense(const Grid& grid, const CovarianceKernel& kernel) {
  const std::size_t n = cells;
  std::vector<double> centers(n * dim);
  for (std::size_t i = 0; i < n; ++i) grid.center(i, {centers.data() + i * dim, static_cast<std::size_t>(dim)});
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double d = centers[i * dim + a] - centers[j * dim + a];
        r2 += d * d;
      }
      cov(i, j) = cov(j, i) = kernel(std::sqrt(r2));
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  // only clearly negative pivots are fatal
  const Eigen::VectorXd pivots = ldlt.vectorD();
  if (pivots.minCoeff() < -1e-8 * pivots.maxCoeff())
    throw SynthesisError("grid covariance is not positive semidefinite");
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd lower = ldlt.matrixL();
  lower = lower * d.asDiagonal();
  factor = ldlt.transpositionsP().transpose() * lower;
  method = "cholesky";
}

GaussianFieldSampler::GaussianFieldSampler(const Grid& grid, const CovarianceKernel& kernel)
    : impl_(std::make_unique<Impl>()) {
  if (!(kernel.length_scale > 0.0)) throw DomainError("kernel length scale must be positive");
  if (kernel.family == KernelFamily::Cauchy && !(kernel.tail_exponent > grid.dim()))
    throw DomainError("cauchy kernel needs tail exponent > window dimension to be integrable");
  impl_->m = grid.cells_per_axis();
  impl_->dim = grid.dim();
  impl_->cells = grid.cell_count();
  if (impl_->cells == 1) {
    impl_->method = "trivial";
    return;
  }
  constexpr std::size_t kMaxEmbeddingPoints = std::size_t{1} << 26;
  std::size_t size = next_pow2(2 * impl_->m);
  for (int attempt = 0; attempt < 6; ++attempt, size *= 2) {
    std::size_t total = 1;
    for (int a = 0; a < impl_->dim; ++a) total *= size;
    if (total > kMaxEmbeddingPoints) break;
    if (impl_->try_circulant(grid, kernel, size)) return;
  }
  if (impl_->cells <= kCholeskyLimit) {
    impl_->build_dense(grid, kernel);
    return;
  }
  std::ostringstream msg;
  msg << "circulant embedding of the " << to_string(kernel.family) << " kernel (length scale "
      << kernel.length_scale << ") is not nonnegative definite on a " << impl_->cells
      << "-point grid, which is too large for the dense fallback (limit " << kCholeskyLimit
      << " points); use a coarser grid, a larger window relative to the length scale, "
         "or the exponential kernel";
  throw SynthesisError(msg.str());
}

GaussianFieldSampler::~GaussianFieldSampler() = default;
GaussianFieldSampler::GaussianFieldSampler(GaussianFieldSampler&&) noexcept = default;
GaussianFieldSampler& GaussianFieldSampler::operator=(GaussianFieldSampler&&) noexcept = default;

const std::string& GaussianFieldSampler::method() const { return impl_->method; }
std::size_t GaussianFieldSampler::embedding_size() const { return impl_->embed; }

void GaussianFieldSampler::sample(Rng& rng, std::span<double> out, std::size_t stride) const {
  const Impl& s = *impl_;
  if (s.method == "trivial") {
    out[0] = rng.normal();
    return;
  }
  if (s.method == "cholesky") {
    Eigen::VectorXd z(static_cast<Eigen::Index>(s.cells));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const Eigen::VectorXd x = s.factor * z;
    for (std::size_t i = 0; i < s.cells; ++i) out[i * stride] = x[static_cast<Eigen::Index>(i)];
    return;
  }
  auto w = fftw_buffer<double>(s.real_size);
  auto spec = fftw_buffer<fftw_complex>(s.complex_size);
  for (std::size_t j = 0; j < s.real_size; ++j) w[j] = rng.normal();
  fftw_execute_dft_r2c(s.forward, w.get(), spec.get());
  for (std::size_t k = 0; k < s.complex_size; ++k) {
    spec[k][0] *= s.spectral_scale[k];
    spec[k][1] *= s.spectral_scale[k];
  }
  fftw_execute_dft_c2r(s.backward, spec.get(), w.get());
  // Copy the leading m^D block of the embedding.
  std::vector<std::size_t> coords(s.dim, 0);
  for (std::size_t cell = 0; cell < s.cells; ++cell) {
    std::size_t rem = cell;
    std::size_t pos = 0;
    std::size_t scale = 1;
    for (int a = s.dim - 1; a >= 0; --a) {
      pos += (rem % s.m) * scale;
      rem /= s.m;
      scale *= s.embed;
    }
    out[cell * stride] = w[pos];
  }
}

CovariateField sample_gaussian_field(const Grid& grid, std::span<const GaussianFieldSampler> samplers,
                                     std::span<const CovarianceKernel> kernels, std::uint64_t seed) {
  if (samplers.empty()) throw DomainError("at least one covariance kernel is required");
  const int d = static_cast<int>(samplers.size());
  CovariateField f;
  f.grid = grid;
  f.dim_d = d;
  f.values.assign(grid.cell_count() * d, 0.0);
  f.seed = seed;
  f.nu = StandardNormalMeasure{};
  GaussianGenerator gen;
  gen.kernels.assign(kernels.begin(), kernels.end());
  gen.method = samplers.front().method();
  for (int h = 0; h < d; ++h) {
    Rng rng(stream_seed(seed, {static_cast<std::uint64_t>(h)}));
    samplers[h].sample(rng, std::span<double>(f.values).subspan(h), static_cast<std::size_t>(d));
  }
  f.generator = std::move(gen);
  return f;
}

CovariateField sample_gaussian_field(const Grid& grid, std::span<const CovarianceKernel> kernels,
                                     std::uint64_t seed) {
  std::vector<GaussianFieldSampler> samplers;
  samplers.reserve(kernels.size());
  for (const auto& k : kernels) samplers.emplace_back(grid, k);
  return sample_gaussian_field(grid, samplers, kernels, seed);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

CovariateField transform_cdf(CovariateField raw) {
  for (double& v : raw.values) v = normal_cdf(v);
  if (auto* g = std::get_if<GaussianGenerator>(&raw.generator)) g->transform = Transform::NormalCdf;
  raw.nu = UniformBoxMeasure{0.0, 1.0};
  return raw;
}

// ---------------------------------------------------------------------------
// Voronoi tessellation

VoronoiTessellation::VoronoiTessellation(int dim, std::vector<double> seeds, std::vector<double> lower,
                                         std::vector<double> upper, double bucket_size)
    : dim_(dim), count_(seeds.size() / dim), seeds_(std::move(seeds)), lower_(std::move(lower)) {
  if (count_ == 0) throw DomainError("tessellation needs at least one seed");
  const std::size_t max_buckets = std::max<std::size_t>(1, 4 * count_);
  for (;;) {
    buckets_per_axis_.assign(dim_, 1);
    std::size_t total = 1;
    for (int a = 0; a < dim_; ++a) {
      buckets_per_axis_[a] = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil((upper[a] - lower_[a]) / bucket_size)));
      total *= buckets_per_axis_[a];
    }
    if (total <= max_buckets) break;
    bucket_size *= 1.5;
  }
  bucket_size_ = bucket_size;
  std::size_t total = 1;
  for (auto b : buckets_per_axis_) total *= b;

  auto bucket_of = [&](std::size_t s) {
    std::size_t b = 0;
    for (int a = 0; a < dim_; ++a) {
      const double t = (seeds_[s * dim_ + a] - lower_[a]) / bucket_size_;
      const auto c = static_cast<std::size_t>(
          std::clamp(std::floor(t), 0.0, static_cast<double>(buckets_per_axis_[a] - 1)));
      b = b * buckets_per_axis_[a] + c;
    }
    return b;
  };
  bucket_start_.assign(total + 1, 0);
  std::vector<std::size_t> owner(count_);
  for (std::size_t s = 0; s < count_; ++s) {
    owner[s] = bucket_of(s);
    ++bucket_start_[owner[s] + 1];
  }
  std::partial_sum(bucket_start_.begin(), bucket_start_.end(), bucket_start_.begin());
  bucket_items_.resize(count_);
  std::vector<std::size_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
  for (std::size_t s = 0; s < count_; ++s) bucket_items_[fill[owner[s]]++] = s;
}

std::size_t VoronoiTessellation::nearest(std::span<const double> x) const {
  std::vector<long> home(dim_);
  long max_ring = 0;
  for (int a = 0; a < dim_; ++a) {
    const double t = std::floor((x[a] - lower_[a]) / bucket_size_);
    home[a] = static_cast<long>(std::clamp(t, 0.0, static_cast<double>(buckets_per_axis_[a] - 1)));
    max_ring = std::max(max_ring, static_cast<long>(buckets_per_axis_[a]));
  }
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = count_;
  std::vector<long> offset(dim_);
  for (long k = 0; k <= max_ring; ++k) {
    // Enumerate buckets at Chebyshev distance exactly k from home.
    std::fill(offset.begin(), offset.end(), -k);
    for (;;) {
      long cheb = 0;
      bool inside = true;
      std::size_t b = 0;
      for (int a = 0; a < dim_; ++a) {
        cheb = std::max(cheb, std::abs(offset[a]));
        const long c = home[a] + offset[a];
        if (c < 0 || c >= static_cast<long>(buckets_per_axis_[a])) {
          inside = false;
          break;
        }
        b = b * buckets_per_axis_[a] + static_cast<std::size_t>(c);
      }
      if (inside && cheb == k) {
        for (std::size_t i = bucket_start_[b]; i < bucket_start_[b + 1]; ++i) {
          const std::size_t s = bucket_items_[i];
          double d2 = 0.0;
          for (int a = 0; a < dim_; ++a) {
            const double d = seeds_[s * dim_ + a] - x[a];
            d2 += d * d;
          }
          if (d2 < best_d2 || (d2 == best_d2 && s < best)) {
            best_d2 = d2;
            best = s;
          }
        }
      }
      int a = dim_ - 1;
      while (a >= 0 && offset[a] == k) offset[a--] = -k;
      if (a < 0) break;
      ++offset[a];
    }
    // Seeds outside the examined rings are at distance > k * bucket_size.
    const double reach = static_cast<double>(k) * bucket_size_;
    if (best < count_ && best_d2 < reach * reach) break;
  }
  return best;
}

double default_voronoi_margin(double rate, int window_dim, std::size_t cell_count) {
  const double logc = std::max(1.0, std::log(static_cast<double>(cell_count)));
  return 3.0 * std::pow(rate, -1.0 / window_dim) * std::pow(logc, 1.0 / window_dim);
}

CovariateField sample_voronoi_field(const Grid& grid, double rate, const MarkLaw& marks, int dim_d,
                                    std::optional<double> margin, std::uint64_t seed) {
  if (!(rate > 0.0)) throw DomainError("tessellation rate must be positive");
  const double mg = margin.value_or(default_voronoi_margin(rate, grid.dim(), grid.cell_count()));
  if (!(mg >= 0.0)) throw DomainError("tessellation margin must be nonnegative");
  if (marks.kind == MarkLaw::Kind::Discrete) {
    if (dim_d != 1) throw DomainError("discrete mark laws are supported for d = 1 only");
    if (marks.values.empty() || marks.values.size() != marks.probs.size())
      throw DomainError("discrete mark law needs matching values and probabilities");
  }
  const int D = grid.dim();
  std::vector<double> lower(D, grid.window().lower() - mg);
  std::vector<double> upper(D, grid.window().upper() + mg);
  double volume = 1.0;
  for (int a = 0; a < D; ++a) volume *= upper[a] - lower[a];

  Rng rng(seed);
  std::uint64_t count = 0;
  int retries = 0;
  while ((count = rng.poisson(rate * volume)) == 0) {
    if (++retries > 10000) throw SynthesisError("tessellation seed process stayed empty after 10000 retries");
  }
  std::vector<double> points(count * D);
  for (std::uint64_t s = 0; s < count; ++s)
    for (int a = 0; a < D; ++a) points[s * D + a] = lower[a] + (upper[a] - lower[a]) * rng.uniform();
  std::vector<double> seed_marks(count * dim_d);
  for (double& v : seed_marks) v = marks.sample(rng);

  VoronoiTessellation tess(D, std::move(points), lower, upper, std::pow(rate, -1.0 / D));
  CovariateField f;
  f.grid = grid;
  f.dim_d = dim_d;
  f.seed = seed;
  f.values.resize(grid.cell_count() * dim_d);
  std::vector<double> x(D);
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.center(cell, x);
    const std::size_t s = tess.nearest(x);
    for (int h = 0; h < dim_d; ++h) f.values[cell * dim_d + h] = seed_marks[s * dim_d + h];
  }
  if (marks.kind == MarkLaw::Kind::Uniform)
    f.nu = UniformBoxMeasure{marks.low, marks.high};
  else
    f.nu = DiscreteMeasure{marks.values, marks.probs};
  f.generator = VoronoiGenerator{rate, marks, mg, retries, static_cast<std::size_t>(count)};
  return f;
}

// ---------------------------------------------------------------------------
// push-forward mass and diagnostics

double PushforwardMass::alpha(NodeIndex node) const {
  if (node.is_root()) return 1.0;
  const std::uint64_t parent = cell_counts[node.parent().id()];
  if (parent == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(cell_counts[node.id()]) / static_cast<double>(parent);
}

PushforwardMass pushforward(const CovariateField& field, const PartitionTree& tree) {
  if (field.dim_d != tree.dim()) throw DomainError("field and partition have different covariate dimensions");
  PushforwardMass pm;
  pm.dim_d = tree.dim();
  pm.max_level = tree.max_level();
  pm.cell_counts.assign(tree.node_count(), 0);
  pm.total_cells = field.cell_count();
  const std::size_t leaf_offset = tree.internal_count();
  for (std::size_t cell = 0; cell < field.cell_count(); ++cell) {
    const auto z = field.at(cell);
    for (double v : z)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("push-forward requires covariate values in [0,1]^d");
    ++pm.cell_counts[leaf_offset + tree.locate_at(z, tree.max_level()).bits];
  }
  for (std::size_t id = leaf_offset; id-- > 0;)
    pm.cell_counts[id] = pm.cell_counts[2 * id + 1] + pm.cell_counts[2 * id + 2];
  pm.mass.resize(pm.cell_counts.size());
  const double total = static_cast<double>(pm.total_cells);
  for (std::size_t id = 0; id < pm.mass.size(); ++id)
    pm.mass[id] = static_cast<double>(pm.cell_counts[id]) / total;
  return pm;
}

double stationary_mass(const StationaryMeasure& nu, const Box& box, int dim_d) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, UniformBoxMeasure>) {
          double p = 1.0;
          for (int a = 0; a < dim_d; ++a) {
            const double lo = std::max(box.lower[a], m.low);
            const double hi = std::min(box.upper[a], m.high);
            p *= std::max(0.0, hi - lo) / (m.high - m.low);
          }
          return p;
        } else if constexpr (std::is_same_v<M, DiscreteMeasure>) {
          double p = 0.0;
          for (std::size_t i = 0; i < m.values.size(); ++i) {
            const double v = m.values[i];
            if (box.contains(std::span<const double>(&v, 1))) p += m.probs[i];
          }
          return p;
        } else {
          double p = 1.0;
          for (int a = 0; a < dim_d; ++a) p *= normal_cdf(box.upper[a]) - normal_cdf(box.lower[a]);
          return p;
        }
      },
      nu);
}

DiagnosticsReport diagnostics(const PushforwardMass& mass, std::span<const NodeIndex> path, double c1,
                              double Cd, const PartitionTree& tree, const StationaryMeasure& nu, double n,
                              double envelope_multiplier) {
  DiagnosticsReport rep;
  rep.c1 = c1;
  rep.Cd = Cd;
  rep.alpha_pass = true;
  rep.mass_pass = true;
  const double inf = std::numeric_limits<double>::infinity();
  for (const NodeIndex& on_path : path) {
    const int l = on_path.level;
    double lo = inf;
    double hi = -inf;
    double scaled = inf;
    for (const NodeIndex node : {on_path, on_path.twin()}) {
      NodeDiagnostic nd;
      nd.node = node;
      nd.mass = mass[node];
      nd.alpha = mass.alpha(node);
      const double floor = std::ldexp(1.0, -l) / Cd;
      nd.alpha_ok = nd.alpha >= c1 && nd.alpha <= 1.0 - c1;
      nd.mass_ok = nd.mass >= floor;
      nd.nu_mass = stationary_mass(nu, tree.bin(node), tree.dim());
      nd.deviation = std::abs(nd.mass - nd.nu_mass);
      nd.envelope = envelope_multiplier * std::sqrt(nd.nu_mass * std::log(n) / n);
      if (nd.envelope > 0.0) rep.max_deviation_ratio = std::max(rep.max_deviation_ratio, nd.deviation / nd.envelope);
      const double a = std::isnan(nd.alpha) ? 0.0 : nd.alpha;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
      scaled = std::min(scaled, std::ldexp(nd.mass, l));
      if (mass.is_zero(node) && node != on_path) {
        // zero-mass twin: excluded, but it forces alpha = 1 on the path node
        continue;
      }
      rep.alpha_pass = rep.alpha_pass && nd.alpha_ok;
      rep.mass_pass = rep.mass_pass && nd.mass_ok;
      rep.nodes.push_back(nd);
    }
    rep.min_alpha.push_back(lo);
    rep.max_alpha.push_back(hi);
    rep.min_scaled_mass.push_back(scaled);
  }
  rep.pass = rep.alpha_pass && rep.mass_pass;
  return rep;
}

}  // namespace coxbayes
