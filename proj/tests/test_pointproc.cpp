#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "coxbayes/covariates.hpp"
#include "coxbayes/error.hpp"
#include "coxbayes/pointproc.hpp"
#include "coxbayes/polyatree.hpp"
#include "coxbayes/rng.hpp"

using namespace coxbayes;

namespace {

CovariateField uniform_field(double n, std::size_t cells, std::uint64_t seed) {
  const Grid g(make_window(1, n), cells);
  const std::vector<CovarianceKernel> ks{{KernelFamily::SquaredExponential, 2.0, 0.0}};
  return transform_cdf(sample_gaussian_field(g, ks, seed));
}

AnalyticIntensity constant(double c) { return {AnalyticIntensity::Kind::Constant, c, 0.0, 0.5}; }

}  // namespace

TEST_CASE("raster of simple intensities") {
  const Grid g(make_window(1, 4.0), 4);
  const CovariateField f = make_field(g, 1, {0.25, 0.5, 0.75, 1.0}, UniformBoxMeasure{});
  for (double v : intensity_raster(IntensityFn(constant(3.0)), f)) CHECK(v == 3.0);
  const AnalyticIntensity id{AnalyticIntensity::Kind::Linear, 0.0, 1.0, 0.5};
  CHECK(intensity_raster(IntensityFn(id), f)[0] == 0.25);
  const AnalyticIntensity neg{AnalyticIntensity::Kind::Linear, -1.0, 1.0, 0.5};
  CHECK_THROWS_AS(intensity_raster(IntensityFn(neg), f), InvariantError);

  auto tree = std::make_shared<const PartitionTree>(1, 3);
  TreeIntensity t;
  t.rho_star = 2.5;
  t.ybar.assign(tree->node_count(), 0.5);
  t.y.assign(tree->node_count(), 1.0);
  t.spike.assign(tree->node_count(), true);
  for (double v : intensity_raster(IntensityFn(TreePiecewise{tree, t}), f)) CHECK(v == 2.5);
}

TEST_CASE("zero intensity gives an empty pattern") {
  const Grid g(make_window(2, 100.0), 10);
  const std::vector<double> zero(g.cell_count(), 0.0);
  const PointPattern p = sample_cox(zero, g, 1);
  CHECK(p.size() == 0);
}

TEST_CASE("homogeneous counts have Poisson mean and variance") {
  const Grid g(make_window(1, 100.0), 50);
  const std::vector<double> one(g.cell_count(), 1.0);
  const int m = 10000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < m; ++r) {
    const double k = static_cast<double>(sample_cox(one, g, stream_seed(3, {static_cast<std::uint64_t>(r)})).size());
    s += k;
    s2 += k * k;
  }
  const double mean = s / m;
  const double var = s2 / m - mean * mean;
  CHECK(std::abs(mean - 100.0) < 3.0 * std::sqrt(100.0 / m));
  // Var of the sample variance of a Poisson(100) is about (2 * 100^2 + 100) / m.
  CHECK(std::abs(var - 100.0) < 3.0 * std::sqrt((2.0 * 1e4 + 100.0) / m));
}

TEST_CASE("step intensity puts every point in the left half") {
  const Grid g(make_window(1, 200.0), 200);
  std::vector<double> raster(200, 0.0);
  for (std::size_t c = 0; c < 100; ++c) raster[c] = 2.0;
  const int m = 2000;
  double s = 0.0;
  for (int r = 0; r < m; ++r) {
    const PointPattern p = sample_cox(raster, g, 40 + r);
    for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(p.point(i)[0] < 0.0);
    s += static_cast<double>(p.size());
  }
  CHECK(std::abs(s / m - 200.0) < 3.0 * std::sqrt(200.0 / m));
}

TEST_CASE("points lie in their cells and the cache sums to the total") {
  const CovariateField f = uniform_field(300.0, 600, 2);
  const PointPattern p = sample_cox(intensity_raster(IntensityFn(constant(2.0)), f), f.grid, 9);
  std::uint64_t total = 0;
  for (auto k : p.cell_counts) total += k;
  CHECK(total == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(f.grid.locate(p.point(i)) == p.cell_of_point[i]);
    CHECK(std::abs(p.point(i)[0]) <= f.grid.window().half_side());
  }
}

TEST_CASE("log-likelihood examples") {
  const Grid g(make_window(1, 50.0), 25);
  const CovariateField f = make_field(g, 1, std::vector<double>(25, 0.5), UniformBoxMeasure{});
  const PointPattern empty = make_pattern(g, {});
  CHECK(log_likelihood(IntensityFn(constant(1.5)), f, empty).value == doctest::Approx(-75.0));
  const PointPattern one = make_pattern(g, {3.2});
  CHECK(log_likelihood(IntensityFn(constant(1.5)), f, one).value == doctest::Approx(std::log(1.5) - 75.0));

  const AnalyticIntensity step{AnalyticIntensity::Kind::Step, 0.0, 1.0, 0.6};
  const auto ll = log_likelihood(IntensityFn(step), f, one);
  CHECK(ll.zero_intensity_at_point);
  CHECK(std::isinf(ll.value));
  CHECK(ll.value < 0.0);
  CHECK_THROWS_AS(make_pattern(g, {30.0}), DomainError);
}

TEST_CASE("property: tree likelihood equals its factorized form") {
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const CovariateField f = uniform_field(400.0, 800, 100 + rep);
    auto tree = std::make_shared<const PartitionTree>(1, 5);
    const PushforwardMass mass = pushforward(f, *tree);
    PolyaHyper h = PolyaHyper::defaults(5, 1);
    std::fill(h.q.begin(), h.q.end(), 0.3);
    const TreeIntensity t = prior_sample(*tree, mass, h, 200 + rep);
    const IntensityFn rho(TreePiecewise{tree, t});
    const PointPattern p = sample_cox(intensity_raster(rho, f), f.grid, 300 + rep);
    const NodeCounts counts = bin_counts(p, f, *tree);

    // |N| log rho* - rho* n + sum over non-root nodes of N_eps log Y_eps.
    double fact = static_cast<double>(p.size()) * std::log(t.rho_star) - t.rho_star * f.n();
    for (std::size_t id = 1; id < tree->node_count(); ++id)
      if (counts.counts[id] > 0) fact += static_cast<double>(counts.counts[id]) * std::log(t.y[id]);
    CHECK(std::abs(log_likelihood(rho, f, p).value - fact) < 1e-9);
  }
}

TEST_CASE("bin counts examples") {
  const Grid g(make_window(1, 10.0), 10);
  const CovariateField f = make_field(g, 1, std::vector<double>(10, 0.1), UniformBoxMeasure{});
  const PartitionTree t(1, 3);
  const NodeCounts none = bin_counts(make_pattern(g, {}), f, t);
  for (auto k : none.counts) CHECK(k == 0);
  const NodeCounts five = bin_counts(make_pattern(g, {-4.0, -2.0, 0.1, 1.0, 4.5}), f, t);
  CHECK(five[NodeIndex{1, 0}] == 5);
  CHECK(five[NodeIndex{1, 1}] == 0);
  CHECK(five.total() == 5);
}

TEST_CASE("property: node counts are additive and sum to the pattern size") {
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const Grid g(make_window(2, 400.0), 30);
    const std::vector<CovarianceKernel> ks(2, CovarianceKernel{KernelFamily::Exponential, 2.0, 0.0});
    const CovariateField f = transform_cdf(sample_gaussian_field(g, ks, rep));
    const AnalyticIntensity rho{AnalyticIntensity::Kind::Sine, 1.0, 0.5, 0.5};
    const PointPattern p = sample_cox(intensity_raster(IntensityFn(rho), f), g, 50 + rep);
    const PartitionTree t(2, 8);
    const NodeCounts c = bin_counts(p, f, t);
    CHECK(c.total() == p.size());
    for (std::size_t id = 0; id < t.internal_count(); ++id)
      REQUIRE(c.counts[id] == c.counts[2 * id + 1] + c.counts[2 * id + 2]);
    for (int l = 0; l <= 8; ++l) {
      std::uint64_t s = 0;
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << l); ++b) s += c[NodeIndex{l, b}];
      CHECK(s == p.size());
    }
    NodeCounts twice = c;
    twice += c;
    CHECK(twice.total() == 2 * p.size());
  }
}

TEST_CASE("property: Campbell formula for a bounded cell function") {
  const CovariateField f = uniform_field(200.0, 100, 8);
  const AnalyticIntensity rho{AnalyticIntensity::Kind::Linear, 0.5, 2.0, 0.5};
  const auto raster = intensity_raster(IntensityFn(rho), f);
  std::vector<double> fc(f.cell_count());
  for (std::size_t c = 0; c < fc.size(); ++c) fc[c] = std::cos(0.3 * static_cast<double>(c));
  double expect = 0.0, var = 0.0;
  for (std::size_t c = 0; c < fc.size(); ++c) {
    expect += fc[c] * raster[c] * f.grid.cell_volume();
    var += fc[c] * fc[c] * raster[c] * f.grid.cell_volume();
  }
  const int m = 5000;
  double s = 0.0;
  for (int r = 0; r < m; ++r) {
    const PointPattern p = sample_cox(raster, f.grid, 900 + r);
    for (std::size_t i = 0; i < p.size(); ++i) s += fc[p.cell_of_point[i]];
  }
  CHECK(std::abs(s / m - expect) < 4.0 * std::sqrt(var / m));
}

TEST_CASE("pattern save and load round trip") {
  const CovariateField f = uniform_field(64.0, 64, 5);
  const PointPattern p = sample_cox(intensity_raster(IntensityFn(constant(1.0)), f), f.grid, 77);
  const auto dir = std::filesystem::temp_directory_path() / "coxbayes_points_rt";
  std::filesystem::create_directories(dir);
  save_pattern(p, dir / "pts", "abc");
  const PointPattern q = load_pattern(dir / "pts");
  CHECK(q.coords == p.coords);
  CHECK(q.cell_counts == p.cell_counts);
  CHECK(q.seed == 77);
  std::filesystem::remove_all(dir);
}

TEST_CASE("simulation is deterministic given the seed") {
  const CovariateField f = uniform_field(128.0, 256, 1);
  const auto raster = intensity_raster(IntensityFn(constant(1.3)), f);
  CHECK(sample_cox(raster, f.grid, 5).coords == sample_cox(raster, f.grid, 5).coords);
  CHECK(sample_cox(raster, f.grid, 5).coords != sample_cox(raster, f.grid, 6).coords);
}
