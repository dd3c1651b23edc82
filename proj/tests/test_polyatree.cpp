#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>

#include "coxbayes/error.hpp"
#include "coxbayes/polyatree.hpp"
#include "coxbayes/rng.hpp"
#include "oracles.hpp"

using namespace coxbayes;

namespace {

// 1-d window of volume n, one covariate value per cell given by f((i + 0.5) / cells).
template <class F>
CovariateField line_field(double n, std::size_t cells, F f) {
  Grid grid(make_window(1, n), cells);
  std::vector<double> v(cells);
  for (std::size_t i = 0; i < cells; ++i) v[i] = f((static_cast<double>(i) + 0.5) / static_cast<double>(cells));
  return make_field(grid, 1, std::move(v), UniformBoxMeasure{});
}

CovariateField uniform_field(double n, std::size_t cells) {
  return line_field(n, cells, [](double s) { return s; });
}

NodeCounts counts_from_leaves(int L, const std::vector<std::uint64_t>& leaves) {
  NodeCounts c;
  c.max_level = L;
  const std::size_t base = (std::size_t{1} << L) - 1;
  c.counts.assign(2 * base + 1, 0);
  for (std::size_t i = 0; i < leaves.size(); ++i) c.counts[base + i] = leaves[i];
  for (std::size_t i = base; i-- > 0;) c.counts[i] = c.counts[2 * i + 1] + c.counts[2 * i + 2];
  return c;
}

PointPattern constant_pattern(const CovariateField& field, double rate, std::uint64_t seed) {
  std::vector<double> raster(field.cell_count(), rate);
  return sample_cox(raster, field.grid, seed);
}

}  // namespace

TEST_CASE("no data recovers the prior spike weight") {
  for (double q : {0.2, 0.5, 0.9})
    for (double a : {0.3, 0.5, 0.75})
      for (double c : {0.5, 1.0, 4.0}) CHECK(spike_probability(0, 0, a, q, c) == doctest::Approx(q).epsilon(1e-14));
}

TEST_CASE("spike probability against the quadrature oracle") {
  const double frozen = 5.8193919744535636e-04;
  const double p = spike_probability(40, 10, 0.5, 0.5, 1.0);
  CHECK(std::abs(p - frozen) / frozen < 1e-6);
  CHECK(std::abs(oracle::spike_probability(40, 10, 0.5, 0.5, 1.0) - frozen) / frozen < 1e-9);

  struct Tuple {
    double nl, nr, a, q, c;
  };
  for (const Tuple& t : {Tuple{3, 7, 0.3, 0.6, 2.0}, Tuple{0, 12, 0.8, 0.9, 0.5}, Tuple{150, 140, 0.5, 0.75, 1.0},
                         Tuple{5, 0, 0.1, 0.5, 3.0}}) {
    const double ref = oracle::spike_probability(t.nl, t.nr, t.a, t.q, t.c);
    CHECK(std::abs(spike_probability(t.nl, t.nr, t.a, t.q, t.c) - ref) / ref < 1e-6);
  }
}

TEST_CASE("rho star conjugate update") {
  const int L = 2;
  PolyaHyper h = PolyaHyper::defaults(L);
  CovariateField field = uniform_field(100.0, 64);
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  NodeCounts counts = counts_from_leaves(L, {10, 20, 15, 5});
  PolyaPosterior post = exact_posterior(counts, mass, h, 100.0);
  CHECK(post.rho_shape == 51.0);
  CHECK(post.rho_rate == 101.0);
  CHECK(post.rho_star_mean() == doctest::Approx(51.0 / 101.0));
  CHECK(post.total_count == 50);
}

TEST_CASE("all spikes give a flat intensity") {
  const int L = 4;
  PolyaHyper h = PolyaHyper::defaults(L, 0);
  std::fill(h.q.begin(), h.q.end(), 1.0);
  CovariateField field = line_field(64.0, 256, [](double s) { return s * s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TreeIntensity t = prior_sample(tree, mass, h, seed);
    for (std::size_t id = 1; id < t.y.size(); ++id) CHECK(t.y[id] == 1.0);
    const double z[] = {0.37};
    CHECK(eval_tree(tree, t, z) == doctest::Approx(t.rho_star));
  }

  NodeCounts counts = counts_from_leaves(L, std::vector<std::uint64_t>(16, 3));
  PolyaPosterior post = exact_posterior(counts, mass, h, 64.0);
  for (const auto& np : post.nodes) CHECK(np.spike_prob == 1.0);
  const double z0[] = {0.4};
  CHECK(posterior_mean_at(post, tree, z0) == doctest::Approx(post.rho_shape / post.rho_rate));
  for (const TreeIntensity& t : posterior_sample(post, 10, 3))
    for (std::size_t id = 1; id < t.y.size(); ++id) CHECK(t.y[id] == 1.0);
}

TEST_CASE("prior spike frequency and slab mean") {
  const int L = 3;
  PolyaHyper h = PolyaHyper::defaults(L, 0);
  h.q = {0.3, 0.5, 0.8};
  h.alpha = {2.0, 2.0, 2.0};
  CovariateField field = line_field(64.0, 1024, [](double s) { return s * s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  const int draws = 10000;
  std::vector<int> spikes(3, 0);
  std::vector<double> slab_sum(3, 0.0), slab_sq(3, 0.0);
  std::vector<int> slab_n(3, 0);
  const std::size_t probe[] = {0, 1, 3};  // one node per level, left child tracked
  for (int i = 0; i < draws; ++i) {
    TreeIntensity t = prior_sample(tree, mass, h, stream_seed(77, {static_cast<std::uint64_t>(i)}));
    for (int l = 0; l < 3; ++l) {
      const std::size_t left = 2 * probe[l] + 1;
      if (t.spike[left]) {
        ++spikes[l];
      } else {
        ++slab_n[l];
        slab_sum[l] += t.ybar[left];
        slab_sq[l] += t.ybar[left] * t.ybar[left];
      }
    }
  }
  for (int l = 0; l < 3; ++l) {
    const double f = spikes[l] / static_cast<double>(draws);
    const double se = std::sqrt(h.q[l] * (1 - h.q[l]) / draws);
    CHECK(std::abs(f - h.q[l]) < 3 * se);
    const double a = mass.alpha(NodeIndex::from_id(2 * probe[l] + 1));
    const double m = slab_sum[l] / slab_n[l];
    const double var = slab_sq[l] / slab_n[l] - m * m;
    CHECK(std::abs(m - a) < 4 * std::sqrt(var / slab_n[l]));
  }
  CHECK(mass.alpha(NodeIndex::from_id(1)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-2));
}

TEST_CASE("posterior spike frequency and product of means") {
  const int L = 4;
  PolyaHyper h = PolyaHyper::defaults(L, 1);
  CovariateField field = line_field(256.0, 4096, [](double s) { return s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  NodeCounts counts = counts_from_leaves(L, {20, 18, 25, 19, 40, 41, 22, 20, 15, 17, 16, 9, 30, 28, 21, 22});
  PolyaPosterior post = exact_posterior(counts, mass, h, 256.0);

  const std::size_t draws = 10000;
  auto sample = posterior_sample(post, draws, 11);
  for (std::size_t id : {1u, 2u, 5u, 9u}) {
    const double p = post.nodes[id].spike_prob;
    std::size_t hits = 0;
    for (const auto& t : sample) hits += t.spike[2 * id + 1];
    const double se = std::sqrt(std::max(p * (1 - p), 1e-4) / draws);
    CHECK(std::abs(hits / static_cast<double>(draws) - p) < 3 * se);
  }

  for (double z : {0.1, 0.4, 0.83}) {
    const double z0[] = {z};
    auto values = pointwise_draws(post, tree, z0, 20000, 5);
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double v = 0.0;
    for (double x : values) v += (x - m) * (x - m);
    v /= values.size() - 1;
    CHECK(std::abs(m - posterior_mean_at(post, tree, z0)) < 4 * std::sqrt(v / values.size()));

    double tree_mean = 0.0;
    for (const auto& t : sample) tree_mean += eval_tree(tree, t, z0);
    tree_mean /= draws;
    CHECK(tree_mean == doctest::Approx(posterior_mean_at(post, tree, z0)).epsilon(0.03));
  }
}

TEST_CASE("pointwise quantiles are ordered and deterministic") {
  const int L = 3;
  PolyaHyper h = PolyaHyper::defaults(L);
  CovariateField field = uniform_field(32.0, 256);
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  NodeCounts counts = counts_from_leaves(L, {3, 9, 1, 4, 0, 7, 2, 6});
  PolyaPosterior post = exact_posterior(counts, mass, h, 32.0);
  const double levels[] = {0.05, 0.5, 0.95};
  for (double z : {0.0, 0.3, 0.55, 1.0}) {
    const double z0[] = {z};
    auto s = pointwise_summary(post, tree, z0, 500, levels, 9);
    REQUIRE(s.quantiles.size() == 3);
    CHECK(s.quantiles[0] <= s.quantiles[1]);
    CHECK(s.quantiles[1] <= s.quantiles[2]);
    auto again = pointwise_summary(post, tree, z0, 500, levels, 9);
    CHECK(again.mean == s.mean);
    CHECK(again.quantiles == s.quantiles);
  }
}

TEST_CASE("credible interval coverage under a constant truth") {
  const double n = 4096.0;
  CovariateField field = uniform_field(n, 4096);
  const int L = default_depth(n);
  CHECK(L == 5);
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  PolyaHyper h = PolyaHyper::defaults(L);
  const double levels[] = {0.05, 0.95};
  const double z0[] = {0.4};
  int covered = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    PointPattern pattern = constant_pattern(field, 2.0, stream_seed(2024, {r}));
    PolyaPosterior post = exact_posterior(bin_counts(pattern, field, tree), mass, h, n);
    auto s = pointwise_summary(post, tree, z0, 400, levels, stream_seed(2025, {r}));
    covered += s.quantiles[0] <= 2.0 && 2.0 <= s.quantiles[1];
  }
  CHECK(covered >= 80);
}

TEST_CASE("truth coefficients") {
  const int L = 6;
  PartitionTree tree(1, L);
  const double z0[] = {0.4};

  SUBCASE("constant truth") {
    CovariateField field = line_field(64.0, 4096, [](double s) { return s * s; });
    auto mass = pushforward(field, tree);
    AnalyticIntensity c{AnalyticIntensity::Kind::Constant, 3.0};
    auto t = truth_coefficients(c, field, tree, mass, z0, 1.0);
    for (std::size_t id = 0; id < t.y0.size(); ++id) CHECK(t.y0[id] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.significant.empty());
  }
  SUBCASE("level one step") {
    CovariateField field = uniform_field(64.0, 4096);
    auto mass = pushforward(field, tree);
    AnalyticIntensity step{AnalyticIntensity::Kind::Step, 3.0, 1.0, 0.5};
    auto t = truth_coefficients(step, field, tree, mass, z0, 1.0);
    CHECK(mass.alpha(NodeIndex::from_id(1)) == doctest::Approx(0.5));
    CHECK(t.y0[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(t.y0[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.path_y0[0] == doctest::Approx(1.5).epsilon(1e-12));
    for (std::size_t id = 3; id < t.y0.size(); ++id) CHECK(t.y0[id] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero truth on the path") {
    CovariateField field = uniform_field(64.0, 4096);
    auto mass = pushforward(field, tree);
    AnalyticIntensity c{AnalyticIntensity::Kind::Constant, 0.0};
    CHECK_THROWS_AS(truth_coefficients(c, field, tree, mass, z0, 1.0), DomainError);
  }
}

TEST_CASE("truth coefficients decay along the path for a Lipschitz kink") {
  const int L = 12;
  PartitionTree tree(1, L);
  CovariateField field = uniform_field(1024.0, std::size_t{1} << 18);
  auto mass = pushforward(field, tree);
  AnalyticIntensity kink{AnalyticIntensity::Kind::Kink, 1.0, 1.0, 0.4};
  const double z0[] = {0.4};
  auto t = truth_coefficients(kink, field, tree, mass, z0, 1.0);
  std::vector<double> xs, ys;
  for (int l = 3; l <= L; ++l) {
    const double dev = std::abs(t.path_y0[l - 1] - 1.0);
    if (dev > 0) {
      xs.push_back(l);
      ys.push_back(std::log2(dev));
    }
  }
  REQUIRE(xs.size() >= 6);
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  CHECK(sxy / sxx == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("bayes factor in log space") {
  const double p_big = spike_probability(500000, 500000, 0.5, 0.5, 1.0);
  CHECK(std::isfinite(log_bayes_factor(500000, 500000, 0.5, 0.5, 1.0)));
  CHECK(p_big > 0.99);
  CHECK(p_big <= 1.0);
  const double lbf = log_bayes_factor(600000, 400000, 0.5, 0.5, 1.0);
  CHECK(std::isfinite(lbf));
  CHECK(lbf > 1000);
  CHECK(spike_probability(600000, 400000, 0.5, 0.5, 1.0) >= 0.0);
  CHECK(std::isfinite(log_bayes_factor(1000000, 0, 0.3, 0.5, 2.0)));

  for (double a : {0.5, 0.3}) {
    const double N = 100;
    const double centre = std::round(a * N);
    double prev = 2.0;
    for (double nl = centre; nl <= N; nl += 1) {
      const double p = spike_probability(nl, N - nl, a, 0.5, 1.0);
      CHECK(p <= prev + 1e-15);
      prev = p;
    }
    prev = 2.0;
    for (double nl = centre; nl >= 0; nl -= 1) {
      const double p = spike_probability(nl, N - nl, a, 0.5, 1.0);
      CHECK(p <= prev + 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("merged patterns add their counts") {
  const int L = 4;
  CovariateField field = line_field(128.0, 1024, [](double s) { return 0.5 + 0.5 * std::sin(6 * s); });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  PointPattern a = constant_pattern(field, 1.0, 1);
  PointPattern b = constant_pattern(field, 2.0, 2);
  std::vector<double> coords = a.coords;
  coords.insert(coords.end(), b.coords.begin(), b.coords.end());
  PointPattern merged = make_pattern(field.grid, coords);

  NodeCounts sum = bin_counts(a, field, tree);
  sum += bin_counts(b, field, tree);
  NodeCounts direct = bin_counts(merged, field, tree);
  CHECK(sum.counts == direct.counts);

  PolyaHyper h = PolyaHyper::defaults(L);
  PolyaPosterior p1 = exact_posterior(sum, mass, h, 128.0);
  PolyaPosterior p2 = exact_posterior(direct, mass, h, 128.0);
  REQUIRE(p1.nodes.size() == p2.nodes.size());
  for (std::size_t i = 0; i < p1.nodes.size(); ++i) {
    CHECK(p1.nodes[i].spike_prob == p2.nodes[i].spike_prob);
    CHECK(p1.nodes[i].a == p2.nodes[i].a);
    CHECK(p1.nodes[i].b == p2.nodes[i].b);
  }
}

TEST_CASE("bin integral identity") {
  const int L = 4;
  CovariateField field = line_field(32.0, 4096, [](double s) { return s * s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  PolyaHyper h = PolyaHyper::defaults(L, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TreeIntensity t = prior_sample(tree, mass, h, seed);
    std::vector<double> integral(tree.node_count(), 0.0);
    for (std::size_t c = 0; c < field.cell_count(); ++c) {
      const auto z = field.at(c);
      const double r = eval_tree(tree, t, z) * field.grid.cell_volume() / field.n();
      integral[0] += r;
      for (const NodeIndex& node : tree.locate(z)) integral[node.id()] += r;
    }
    for (std::size_t id = 0; id < tree.node_count(); ++id) {
      NodeIndex node = NodeIndex::from_id(id);
      double expect = t.rho_star;
      for (NodeIndex e = node; !e.is_root(); e = e.parent()) expect *= t.ybar[e.id()];
      CHECK(integral[id] == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("zero mass subtrees are frozen") {
  const int L = 3;
  CovariateField field = line_field(16.0, 256, [](double s) { return 0.45 * s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  NodeCounts counts = counts_from_leaves(L, {4, 5, 6, 7, 0, 0, 0, 0});
  PolyaPosterior post = exact_posterior(counts, mass, PolyaHyper::defaults(L), 16.0);
  CHECK(post.nodes[0].frozen);
  CHECK(post.nodes[0].spike_prob == 1.0);
  CHECK(post.nodes[2].frozen);
  CHECK_FALSE(post.nodes[1].frozen);
  Rng rng(1);
  TreeIntensity t = sample_tree(post, rng);
  CHECK(t.y[1] == 1.0);
  CHECK(t.y[2] == 1.0);
}

TEST_CASE("hyperparameter checks and depth") {
  PolyaHyper h = PolyaHyper::defaults(8);
  CHECK(h.q[0] == 0.5);
  CHECK(h.q[3] == doctest::Approx(1 - 0.125));
  auto c = check_hyper(h, 4096.0);
  CHECK(c.spike_floor);
  CHECK(c.sparsity);
  CHECK(c.worst_sparsity_ratio == doctest::Approx(1.0));
  CHECK_FALSE(check_hyper(h, 4096.0, 1.5).sparsity);
  CHECK(c.max_alpha_2l_over_n == doctest::Approx(128.0 / 4096.0));

  PolyaHyper slow = PolyaHyper::defaults(8, 0, 0.5);
  CHECK(slow.q[4] == doctest::Approx(0.75));
  CHECK(check_hyper(slow, 4096.0, 0.5).sparsity);

  h.q[5] = 1.5;
  CHECK_THROWS_AS(h.validate(), DomainError);
  h = PolyaHyper::defaults(8);
  h.alpha.pop_back();
  CHECK_THROWS_AS(h.validate(), DomainError);

  CHECK(default_depth(4096.0) == 5);
  CHECK(default_depth(16384.0) == 7);
  CHECK(default_depth(10.0) == 1);
}

TEST_CASE("posterior json round trip") {
  const int L = 5;
  CovariateField field = line_field(77.0, 2048, [](double s) { return std::sqrt(s); });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  PointPattern pat = constant_pattern(field, 1.3, 4);
  PolyaPosterior post = exact_posterior(bin_counts(pat, field, tree), mass, PolyaHyper::defaults(L), 77.0);
  const auto path = std::filesystem::temp_directory_path() / "coxbayes_test_posterior.json";
  save_posterior(post, path);
  PolyaPosterior back = load_posterior(path);
  std::filesystem::remove(path);
  CHECK(back.dim_d == post.dim_d);
  CHECK(back.max_level == post.max_level);
  CHECK(back.n == post.n);
  CHECK(back.total_count == post.total_count);
  CHECK(back.rho_shape == post.rho_shape);
  CHECK(back.rho_rate == post.rho_rate);
  REQUIRE(back.nodes.size() == post.nodes.size());
  for (std::size_t i = 0; i < post.nodes.size(); ++i) {
    CHECK(back.nodes[i].alpha_left == post.nodes[i].alpha_left);
    CHECK(back.nodes[i].spike_prob == post.nodes[i].spike_prob);
    CHECK(back.nodes[i].a == post.nodes[i].a);
    CHECK(back.nodes[i].b == post.nodes[i].b);
    CHECK(back.nodes[i].frozen == post.nodes[i].frozen);
  }
}

TEST_CASE("factorized likelihood matches the raster likelihood") {
  const int L = 4;
  CovariateField field = line_field(50.0, 1000, [](double s) { return s * s; });
  PartitionTree tree(1, L);
  auto mass = pushforward(field, tree);
  PointPattern pat = constant_pattern(field, 2.0, 8);
  NodeCounts counts = bin_counts(pat, field, tree);
  TreeIntensity t = prior_sample(tree, mass, PolyaHyper::defaults(L, 0), 6);
  auto shared = std::make_shared<const PartitionTree>(tree);
  IntensityFn fn(TreePiecewise{shared, t});
  const double direct = log_likelihood(fn, field, pat).value;
  CHECK(factorized_log_likelihood(t, counts, field.n()) == doctest::Approx(direct).epsilon(1e-9));
}
