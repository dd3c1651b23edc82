#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <bit>
#include <cmath>
#include <memory>
#include <numeric>

#include "coxbayes/error.hpp"
#include "coxbayes/gpprior.hpp"
#include "coxbayes/intensity.hpp"
#include "coxbayes/link.hpp"
#include "coxbayes/rng.hpp"
#include "coxbayes/wavelet.hpp"

using namespace coxbayes;

namespace {

std::shared_ptr<const WaveletBasis> make_basis(WaveletFamily f, int d, int L) {
  return std::make_shared<const WaveletBasis>(f, d, L);
}

// Gram matrix of the basis up to `level` by midpoint sums over a regular grid of m points per axis.
std::vector<double> gram(const WaveletBasis& b, int level, std::size_t m) {
  const std::size_t K = b.count(level);
  std::vector<double> G(K * K, 0.0);
  const int d = b.dim();
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  std::vector<double> z(d), vals(K);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t r = p;
    for (int a = 0; a < d; ++a) {
      z[a] = (static_cast<double>(r % m) + 0.5) / static_cast<double>(m);
      r /= m;
    }
    for (std::size_t i = 0; i < K; ++i) vals[i] = b.value(i, z);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) G[i * K + j] += vals[i] * vals[j];
  }
  for (double& g : G) g /= static_cast<double>(total);
  return G;
}

double max_identity_error(const std::vector<double>& G) {
  const auto K = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(G.size()))));
  double worst = 0.0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) worst = std::max(worst, std::abs(G[i * K + j] - (i == j ? 1.0 : 0.0)));
  return worst;
}

// Smooth bump convolved with the ramp, by composite Simpson over the bump support.
double ramp_oracle(double u, double a) {
  const double c = std::pow(2.0 / (a - 1.0), 1.0 / (a - 1.0));
  auto g = [&](double v) { return v >= 0.0 ? 1.0 + v : std::pow(c / (c - v), a - 1.0); };
  auto h = [](double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; };
  const int m = 200000;
  const double step = 2.0 / m;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double s = -1.0 + i * step;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    num += w * h(s) * g(u - s);
    den += w * h(s);
  }
  return num / den;
}

}  // namespace

TEST_CASE("haar basis is orthonormal") {
  for (int d : {1, 2}) {
    const int L = d == 1 ? 5 : 3;
    auto b = make_basis(WaveletFamily::Haar, d, L);
    CHECK(b->count(L) == (std::size_t{1} << (L * d)));
    auto G = gram(*b, L, std::size_t{1} << (L + 1));
    CHECK(max_identity_error(G) < 1e-12);
  }
}

TEST_CASE("daubechies basis is nearly orthonormal on a fine grid") {
  auto b = make_basis(WaveletFamily::Daubechies4, 1, 5);
  auto G = gram(*b, 5, 8192);
  CHECK(max_identity_error(G) < 2e-2);
}

TEST_CASE("tensor evaluation matches products of 1-d values") {
  for (WaveletFamily f : {WaveletFamily::Haar, WaveletFamily::Daubechies4}) {
    auto b = make_basis(f, 2, 3);
    Rng rng(3);
    std::vector<BasisTerm> terms;
    double worst = 0.0;
    for (int p = 0; p < 1000; ++p) {
      const double z[] = {rng.uniform(), rng.uniform()};
      b->evaluate(z, 3, terms);
      std::vector<double> dense(b->count(3), 0.0);
      for (const auto& t : terms) dense[t.index] += t.value;
      for (std::size_t i = 0; i < dense.size(); ++i) {
        const auto ax = b->axis_indices(i);
        const double prod = b->value_1d(ax[0], z[0]) * b->value_1d(ax[1], z[1]);
        worst = std::max(worst, std::abs(dense[i] - prod));
      }
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("levels of tensor coefficients") {
  auto b = make_basis(WaveletFamily::Haar, 2, 3);
  CHECK(b->count(1) == 4);
  CHECK(b->count(2) == 16);
  for (std::size_t i = 0; i < b->count(3); ++i) {
    const auto ax = b->axis_indices(i);
    int lv = 1;
    for (auto k : ax) lv = std::max(lv, k == 0 ? 1 : static_cast<int>(std::bit_width(k)));
    CHECK(b->level_of(i) == lv);
  }
  CHECK(max_wavelet_level(1) == 18);
  CHECK(max_wavelet_level(2) == 9);
}

TEST_CASE("prior variance") {
  const double alpha = 1.0;
  auto b = make_basis(WaveletFamily::Haar, 1, 6);
  const double z1[] = {0.3};
  // level 1 holds the constant and the mother wavelet, both of unit modulus under haar
  CHECK(prior_variance(*b, alpha, 1, z1) == doctest::Approx(2 * std::exp2(-2 * (alpha + 0.5))));

  Rng pick(8);
  for (int p = 0; p < 5; ++p) {
    const double z[] = {pick.uniform()};
    const int draws = 100000;
    double s = 0.0, s2 = 0.0;
    std::vector<double> w2(draws);
    for (int i = 0; i < draws; ++i) {
      const auto seed = stream_seed(40, {std::uint64_t(p), std::uint64_t(i)});
      WaveletState st = prior_sample_wavelet(b, alpha, 4, LinkFn::exp(), seed);
      const double w = st.field(z);
      w2[i] = w * w;
      s += w2[i];
    }
    const double m = s / draws;
    for (double v : w2) s2 += (v - m) * (v - m);
    const double se = std::sqrt(s2 / (draws - 1) / draws);
    CHECK(std::abs(m - prior_variance(*b, alpha, 4, z)) < 3 * se);
  }
}

TEST_CASE("prior draws are deterministic") {
  auto b = make_basis(WaveletFamily::Daubechies4, 1, 6);
  auto a = prior_sample_wavelet(b, 1.5, 5, LinkFn::exp(), 99);
  auto c = prior_sample_wavelet(b, 1.5, 5, LinkFn::exp(), 99);
  CHECK(a.coefficients == c.coefficients);
  CHECK(a.coefficients.size() == 32);
  CHECK_THROWS_AS(prior_sample_wavelet(b, 1.5, 7, LinkFn::exp(), 1), DomainError);
}

TEST_CASE("links at zero coefficients") {
  auto b = make_basis(WaveletFamily::Haar, 1, 4);
  WaveletState s = prior_sample_wavelet(b, 1.0, 3, LinkFn::exp(), 1);
  std::fill(s.coefficients.begin(), s.coefficients.end(), 0.0);
  for (double z : {0.0, 0.2, 0.77, 1.0}) {
    const double zz[] = {z};
    CHECK(eval_rho(s, zz) == 1.0);
  }
  s.link = LinkFn::sigmoid(4.0);
  const double zz[] = {0.5};
  CHECK(eval_rho(s, zz) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("mollified ramp against a direct convolution") {
  for (double a : {2.0, 3.0}) {
    const LinkFn eta = LinkFn::mollified_ramp(a);
    CHECK(std::abs(eta(10.0) - 11.0) < 1e-6);
    for (double u : {-30.0, -4.0, -0.7, 0.0, 0.4, 0.95, 1.5, 10.0}) {
      const double ref = ramp_oracle(u, a);
      CHECK(std::abs(eta(u) - ref) / ref < 1e-6);
    }
  }
}

TEST_CASE("links are positive and increasing") {
  for (const LinkFn& eta : {LinkFn::exp(), LinkFn::sigmoid(3.0), LinkFn::mollified_ramp(2.0),
                            LinkFn::mollified_ramp(4.0)}) {
    double prev = 0.0;
    bool ok = true;
    for (int i = 0; i < 10000; ++i) {
      const double u = -40.0 + 80.0 * i / 9999.0;
      const double v = eta(u);
      ok = ok && v > 0.0 && v >= prev && eta.derivative(u) > 0.0;
      prev = v;
    }
    CHECK_MESSAGE(ok, eta.name());
  }
  CHECK(LinkFn::mollified_ramp(2.0)(-1e6) > 0.0);
  CHECK(LinkFn::mollified_ramp(2.0).derivative(-1e6) > 0.0);
}

TEST_CASE("mollified ramp tail bound") {
  for (double a : {1.5, 2.0, 3.0}) {
    const LinkFn eta = LinkFn::mollified_ramp(a);
    const double v0 = eta.tail_threshold();
    CHECK(v0 < 0.0);
    double worst = INFINITY;
    for (double v = v0 - 1e-3; v > -50.0; v -= 1e-3) worst = std::min(worst, eta.derivative(v) * std::pow(-v, a));
    CHECK(worst >= 1.0);
  }
}

TEST_CASE("pcn with a constant likelihood keeps the prior") {
  auto b = make_basis(WaveletFamily::Haar, 1, 4);
  WaveletState init = prior_sample_wavelet(b, 1.0, 3, LinkFn::exp(), 5);
  PcnOptions opt;
  opt.beta = 0.5;
  opt.adapt = false;
  opt.burn_in = 1000;
  opt.iters = 201000;
  opt.thin = 10;
  ChainResult r = pcn_chain(init, WaveletTarget::constant(), opt, 17);
  CHECK(r.acceptance_rate == 1.0);
  for (double z : {0.1, 0.45, 0.9}) {
    const double zz[] = {z};
    std::vector<double> w2;
    for (const auto& s : r.samples) {
      const double w = s.field(zz);
      w2.push_back(w * w);
    }
    const double m = std::accumulate(w2.begin(), w2.end(), 0.0) / w2.size();
    double v = 0.0;
    for (double x : w2) v += (x - m) * (x - m);
    v /= w2.size() - 1;
    CHECK(std::abs(m - prior_variance(*b, 1.0, 3, zz)) < 4 * std::sqrt(v / w2.size()));
  }
}

TEST_CASE("tiny pcn steps barely move") {
  auto b = make_basis(WaveletFamily::Haar, 1, 4);
  WaveletState init = prior_sample_wavelet(b, 1.0, 4, LinkFn::exp(), 5);
  PcnOptions opt;
  opt.beta = 1e-4;
  opt.adapt = false;
  opt.iters = 100;
  ChainResult r = pcn_chain(init, WaveletTarget::constant(), opt, 3);
  CHECK(r.acceptance_rate == 1.0);
  double moved = 0.0;
  for (std::size_t i = 0; i < init.coefficients.size(); ++i)
    moved = std::max(moved, std::abs(r.final_state.coefficients[i] - init.coefficients[i]));
  CHECK(moved < 0.01);
  opt.beta = 0.0;
  CHECK_THROWS_AS(pcn_chain(init, WaveletTarget::constant(), opt, 1), DomainError);
}

TEST_CASE("level move recovers the level prior") {
  LevelPrior prior{0.05, 1, 1, 4};
  const auto probs = prior.probabilities();
  CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0));
  auto b = make_basis(WaveletFamily::Haar, 1, 6);
  WaveletTarget flat = WaveletTarget::constant();
  WaveletState s = prior_sample_wavelet(b, 1.0, 1, LinkFn::exp(), 2);
  Rng rng(12);
  double ll = 0.0;
  std::vector<double> hist(4, 0.0);
  const int moves = 100000;
  for (int i = 0; i < moves; ++i) {
    level_move(s, prior, flat, ll, rng);
    hist[s.level - 1] += 1.0;
  }
  // independent restarts drawn from the target, 25 moves each
  std::vector<double> restart(4, 0.0);
  const int chains = 4000;
  for (int c = 0; c < chains; ++c) {
    Rng r(stream_seed(31, {std::uint64_t(c)}));
    double u = r.uniform(), acc = 0.0;
    int l = 1;
    for (; l < 4; ++l) {
      acc += probs[l - 1];
      if (u < acc) break;
    }
    WaveletState st = prior_sample_wavelet(b, 1.0, l, LinkFn::exp(), stream_seed(32, {std::uint64_t(c)}));
    double lc = 0.0;
    for (int k = 0; k < 25; ++k) level_move(st, prior, flat, lc, r);
    restart[st.level - 1] += 1.0;
  }
  auto chi2 = [&](const std::vector<double>& h, double total) {
    double x = 0.0;
    for (int l = 0; l < 4; ++l) x += (h[l] - total * probs[l]) * (h[l] - total * probs[l]) / (total * probs[l]);
    return x;
  };
  const double crit = boost::math::quantile(boost::math::complement(boost::math::chi_squared(3.0), 0.01));
  CHECK(chi2(restart, chains) < crit);
  for (int l = 0; l < 4; ++l) CHECK(hist[l] / moves == doctest::Approx(probs[l]).epsilon(0.1));
}

TEST_CASE("level move boundaries and birth then death") {
  auto b = make_basis(WaveletFamily::Haar, 1, 6);
  WaveletTarget flat = WaveletTarget::constant();
  LevelPrior single{1.0, 1, 1, 1};
  Rng rng(4);
  WaveletState s = prior_sample_wavelet(b, 1.0, 1, LinkFn::exp(), 2);
  double ll = 0.0;
  for (int i = 0; i < 50; ++i) CHECK_FALSE(level_move(s, single, flat, ll, rng));
  CHECK(s.level == 1);

  LevelPrior wide{0.01, 1, 1, 5};
  WaveletState t = prior_sample_wavelet(b, 1.0, 2, LinkFn::exp(), 3);
  const std::vector<double> low = t.coefficients;
  bool born = false;
  while (!born) born = level_move(t, wide, flat, ll, rng) && t.level == 3;
  CHECK(t.coefficients.size() == 8);
  bool died = false;
  while (!died) died = level_move(t, wide, flat, ll, rng) && t.level == 2;
  CHECK(t.coefficients == low);
}

TEST_CASE("haar target matches the raster likelihood") {
  Grid grid(make_window(1, 64.0), 512);
  std::vector<double> vals(512);
  for (std::size_t i = 0; i < 512; ++i) vals[i] = std::fmod(0.37 * i + 0.1, 1.0);
  CovariateField field = make_field(grid, 1, vals, UniformBoxMeasure{});
  std::vector<double> raster(512, 1.5);
  PointPattern pat = sample_cox(raster, grid, 6);
  auto b = make_basis(WaveletFamily::Haar, 1, 4);
  WaveletTarget target(b, field, pat);
  CHECK_FALSE(target.is_constant());
  CHECK(target.atom_count() <= 16);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WaveletState s = prior_sample_wavelet(b, 1.0, 4, LinkFn::exp(), seed);
    const double direct = log_likelihood(IntensityFn(LinkedWavelet{s}), field, pat).value;
    CHECK(target.log_likelihood(s) == doctest::Approx(direct).epsilon(1e-10));
  }

  auto d4 = make_basis(WaveletFamily::Daubechies4, 1, 4);
  WaveletTarget t4(d4, field, pat);
  WaveletState s4 = prior_sample_wavelet(d4, 1.0, 4, LinkFn::sigmoid(3.0), 1);
  CHECK(t4.log_likelihood(s4) == doctest::Approx(log_likelihood(IntensityFn(LinkedWavelet{s4}), field, pat).value));
}

TEST_CASE("chains are deterministic") {
  Grid grid(make_window(1, 32.0), 256);
  std::vector<double> vals(256);
  for (std::size_t i = 0; i < 256; ++i) vals[i] = (i + 0.5) / 256.0;
  CovariateField field = make_field(grid, 1, vals, UniformBoxMeasure{});
  std::vector<double> raster(256, 2.0);
  PointPattern pat = sample_cox(raster, grid, 1);
  auto b = make_basis(WaveletFamily::Haar, 1, 5);
  WaveletTarget target(b, field, pat);
  WaveletState init = prior_sample_wavelet(b, 1.0, 3, LinkFn::exp(), 2);
  PcnOptions opt;
  opt.iters = 500;
  opt.burn_in = 200;
  opt.level_prior = LevelPrior{1.0, 1, 1, 5};
  ChainResult a = pcn_chain(init, target, opt, 8);
  ChainResult c = pcn_chain(init, target, opt, 8);
  REQUIRE(a.records.size() == c.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].log_likelihood == c.records[i].log_likelihood);
    CHECK(a.records[i].level == c.records[i].level);
  }
  CHECK(a.final_state.coefficients == c.final_state.coefficients);
  CHECK(a.beta == c.beta);
}
