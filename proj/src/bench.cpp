#include "coxbayes/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "coxbayes/error.hpp"
#include "coxbayes/io.hpp"
#include "coxbayes/metrics.hpp"
#include "coxbayes/parallel.hpp"
#include "coxbayes/pointproc.hpp"

namespace coxbayes {

SlopeFit fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("slope fit needs equally many x and y values");
  const std::size_t k = x.size();
  if (k < 3) throw DomainError("slope fit needs at least 3 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("slope fit design is degenerate (all x equal)");
  SlopeFit f;
  f.points = k;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    sse += e * e;
  }
  const double s2 = sse / static_cast<double>(k - 2);
  f.stderr_slope = std::sqrt(s2 / sxx);
  f.stderr_intercept = std::sqrt(s2 * (1.0 / k + mx * mx / sxx));
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

std::vector<double> isotonic_nonincreasing(std::span<const double> y, std::span<const double> w) {
  struct Block {
    double value, weight;
    std::size_t size;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], w.empty() ? 1.0 : w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
      a.weight += b.weight;
      a.size += b.size;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.size, b.value);
  return out;
}

StationaryMeasure CovariateSpec::stationary_measure() const {
  switch (family) {
    case Family::GaussianCdf:
      return UniformBoxMeasure{0.0, 1.0};
    case Family::GaussianRaw:
      return StandardNormalMeasure{};
    case Family::Voronoi:
      if (marks.kind == MarkLaw::Kind::Uniform) return UniformBoxMeasure{marks.low, marks.high};
      return DiscreteMeasure{marks.values, marks.probs};
  }
  return UniformBoxMeasure{};
}

std::string to_string(CovariateSpec::Family family) {
  switch (family) {
    case CovariateSpec::Family::GaussianCdf:
      return "gaussian_cdf";
    case CovariateSpec::Family::GaussianRaw:
      return "gaussian";
    case CovariateSpec::Family::Voronoi:
      return "voronoi";
  }
  return "?";
}

CovariateSimulator::CovariateSimulator(const CovariateSpec& spec, double n)
    : spec_(spec), grid_(Grid::with_spacing(make_window(spec.window_dim, n), spec.spacing)) {
  if (spec.family == CovariateSpec::Family::Voronoi) return;
  if (spec.kernels.empty()) throw DomainError("gaussian covariates need at least one kernel");
  for (int h = 0; h < spec.dim_d; ++h)
    kernels_.push_back(spec.kernels.size() == 1 ? spec.kernels.front() : spec.kernels.at(h));
  for (const auto& k : kernels_) samplers_.emplace_back(grid_, k);
}

CovariateField CovariateSimulator::sample(std::uint64_t seed) const {
  switch (spec_.family) {
    case CovariateSpec::Family::Voronoi:
      return sample_voronoi_field(grid_, spec_.voronoi_rate, spec_.marks, spec_.dim_d, spec_.margin, seed);
    case CovariateSpec::Family::GaussianRaw:
      return sample_gaussian_field(grid_, samplers_, kernels_, seed);
    case CovariateSpec::Family::GaussianCdf:
      return transform_cdf(sample_gaussian_field(grid_, samplers_, kernels_, seed));
  }
  throw Error("unreachable");
}

std::string to_string(RateModel m) { return m == RateModel::Polya ? "polya" : "gp"; }

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::EmpiricalL1:
      return "empirical_l1";
    case LossKind::L1Nu:
      return "l1_nu";
    case LossKind::Pointwise:
      return "pointwise";
  }
  return "?";
}

double RateExperiment::theoretical_exponent() const {
  const double d = covariates.dim_d;
  if (model == RateModel::Gp && loss != LossKind::Pointwise) {
    const double a = gp.alpha;
    return -std::min(a, beta) / (2.0 * a + d);
  }
  return -beta / (2.0 * beta + d);
}

void RateExperiment::validate() const {
  if (n_grid.size() < 3) throw DomainError("n_grid needs at least 3 values");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (!(n_grid[i] > n_grid[i - 1])) throw DomainError("n_grid must be strictly increasing");
  if (replicates == 0) throw DomainError("replicates must be positive");
  if (covariates.family == CovariateSpec::Family::GaussianRaw)
    throw DomainError("rate experiments need covariates in [0,1]^d (use the gaussian_cdf family)");
  if (loss == LossKind::Pointwise && z0.size() != static_cast<std::size_t>(covariates.dim_d))
    throw DomainError("z0 must have d coordinates");
}

namespace {

struct Replicate {
  CovariateField field;
  PointPattern pattern;
};

Replicate simulate(const RateExperiment& exp, const CovariateSimulator& sim, std::uint64_t base) {
  Replicate r{sim.sample(stream_seed(base, {0})), {}};
  const auto raster = intensity_raster(IntensityFn(exp.truth), r.field);
  r.pattern = sample_cox(raster, r.field.grid, stream_seed(base, {1}));
  return r;
}

RateRow polya_replicate(const RateExperiment& exp, const CovariateSimulator& sim, double n, std::uint64_t base) {
  const Replicate rep = simulate(exp, sim, base);
  const int d = exp.covariates.dim_d;
  const int depth = exp.polya.depth.value_or(default_depth(n, exp.polya.delta));
  const PartitionTree tree(d, depth);
  const PushforwardMass mass = pushforward(rep.field, tree);
  const NodeCounts counts = bin_counts(rep.pattern, rep.field, tree);
  PolyaHyper hyper = PolyaHyper::defaults(depth, exp.polya.L0, exp.polya.spike_decay);
  std::fill(hyper.alpha.begin(), hyper.alpha.end(), exp.polya.alpha);
  if (exp.polya.q) std::fill(hyper.q.begin(), hyper.q.end(), *exp.polya.q);
  hyper.rho_shape = exp.polya.rho_shape;
  hyper.rho_rate = exp.polya.rho_rate;
  const PolyaPosterior post = exact_posterior(counts, mass, hyper, n);
  const IntensityFn truth(exp.truth);

  RateRow row;
  row.points = rep.pattern.size();
  row.extra = depth;
  switch (exp.loss) {
    case LossKind::Pointwise: {
      const double target = truth(exp.z0);
      const auto draws = pointwise_draws(post, tree, exp.z0, exp.polya.draws, stream_seed(base, {2}));
      double s = 0.0;
      for (double v : draws) s += std::abs(v - target);
      row.loss = s / static_cast<double>(draws.size());
      break;
    }
    case LossKind::L1Nu: {
      const Quadrature q = make_quadrature(rep.field.nu, d, 4096);
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        s += q.weights[i] * std::abs(posterior_mean_at(post, tree, q.point(i)) - truth(q.point(i)));
      row.loss = s;
      break;
    }
    case LossKind::EmpiricalL1: {
      double s = 0.0;
      for (std::size_t c = 0; c < rep.field.cell_count(); ++c)
        s += std::abs(posterior_mean_at(post, tree, rep.field.at(c)) - truth(rep.field.at(c)));
      row.loss = s / static_cast<double>(rep.field.cell_count());
      break;
    }
  }
  return row;
}

int default_gp_level(const RateExperiment& exp, double n) {
  const double d = exp.covariates.dim_d;
  const int l = static_cast<int>(std::ceil(std::log2(std::pow(n, 1.0 / (2.0 * exp.gp.alpha + d)))));
  return std::clamp(l, 1, max_wavelet_level(exp.covariates.dim_d));
}

RateRow gp_replicate(const RateExperiment& exp, const CovariateSimulator& sim, double n, std::uint64_t base) {
  const Replicate rep = simulate(exp, sim, base);
  const int d = exp.covariates.dim_d;
  const int level = exp.gp.level.value_or(default_gp_level(exp, n));
  const int top = exp.gp.level_prior_c ? std::min(max_wavelet_level(d), level + 3) : level;
  auto basis = std::make_shared<const WaveletBasis>(exp.gp.family, d, top);
  const WaveletTarget target(basis, rep.field, rep.pattern);
  WaveletState init;
  init.basis = basis;
  init.alpha = exp.gp.alpha;
  init.level = level;
  init.link = exp.gp.link;
  init.coefficients.assign(basis->count(level), 0.0);
  PcnOptions opt = exp.gp.pcn;
  if (exp.gp.level_prior_c) opt.level_prior = LevelPrior{*exp.gp.level_prior_c, d, 1, top};
  const ChainResult chain = pcn_chain(init, target, opt, stream_seed(base, {2}));
  if (chain.samples.empty()) throw Error("chain kept no samples; check iters, burn_in and thin");
  const IntensityFn truth(exp.truth);

  RateRow row;
  row.points = rep.pattern.size();
  row.extra = chain.acceptance_rate;
  const double inv = 1.0 / static_cast<double>(chain.samples.size());
  auto posterior_mean = [&](std::span<const double> z) {
    double m = 0.0;
    for (const auto& s : chain.samples) m += s.rho(z);
    return m * inv;
  };
  switch (exp.loss) {
    case LossKind::Pointwise: {
      const double target_value = truth(exp.z0);
      double s = 0.0;
      for (const auto& st : chain.samples) s += std::abs(st.rho(exp.z0) - target_value);
      row.loss = s * inv;
      break;
    }
    case LossKind::L1Nu: {
      const Quadrature q = make_quadrature(rep.field.nu, d, exp.gp.quad_points);
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::abs(posterior_mean(q.point(i)) - truth(q.point(i)));
      row.loss = s;
      break;
    }
    case LossKind::EmpiricalL1: {
      double s = 0.0;
      for (std::size_t c = 0; c < rep.field.cell_count(); ++c)
        s += std::abs(posterior_mean(rep.field.at(c)) - truth(rep.field.at(c)));
      row.loss = s / static_cast<double>(rep.field.cell_count());
      break;
    }
  }
  return row;
}

RateRow replicate_row(const RateExperiment& exp, const CovariateSimulator& sim, std::size_t ni, std::size_t rep) {
  const double n = exp.n_grid[ni];
  const std::uint64_t base = stream_seed(exp.seed, {ni, rep});
  RateRow row;
  try {
    row = exp.model == RateModel::Polya ? polya_replicate(exp, sim, n, base) : gp_replicate(exp, sim, n, base);
  } catch (const std::exception& e) {
    row = RateRow{};
    row.failed = true;
    row.error = e.what();
  }
  row.n = n;
  row.replicate = rep;
  row.seed = base;
  return row;
}

}  // namespace

RateRow run_rate_replicate(const RateExperiment& exp, std::size_t n_index, std::size_t replicate) {
  const CovariateSimulator sim(exp.covariates, exp.n_grid.at(n_index));
  return replicate_row(exp, sim, n_index, replicate);
}

RateResult run_rate(const RateExperiment& exp) {
  exp.validate();
  std::vector<CovariateSimulator> sims;
  for (double n : exp.n_grid) sims.emplace_back(exp.covariates, n);
  const std::size_t per_n = exp.replicates;
  const std::size_t total = per_n * exp.n_grid.size();
  RateResult result;
  result.rows.resize(total);
  // Largest windows first so the pool drains evenly.
  parallel_for(total, exp.threads, [&](std::size_t job) {
    const std::size_t slot = total - 1 - job;
    const std::size_t ni = slot / per_n;
    result.rows[slot] = replicate_row(exp, sims[ni], ni, slot % per_n);
  });
  for (const auto& r : result.rows) result.failures += r.failed;
  if (static_cast<double>(result.failures) > 0.05 * static_cast<double>(total)) {
    std::string first;
    for (const auto& r : result.rows)
      if (r.failed) {
        first = r.error;
        break;
      }
    throw Error(std::to_string(result.failures) + " of " + std::to_string(total) +
                " replicates failed (more than 5%); first error: " + first);
  }
  result.n_grid = exp.n_grid;
  result.exponent = exp.theoretical_exponent();
  std::vector<double> lx, ly;
  for (std::size_t ni = 0; ni < exp.n_grid.size(); ++ni) {
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t r = 0; r < per_n; ++r) {
      const auto& row = result.rows[ni * per_n + r];
      if (row.failed) continue;
      s += row.loss;
      ++k;
    }
    const double m = k ? s / static_cast<double>(k) : std::nan("");
    result.mean_loss.push_back(m);
    if (m > 0.0) {
      lx.push_back(std::log(exp.n_grid[ni]));
      ly.push_back(std::log(m));
    }
  }
  if (lx.size() >= 3) result.fit = fit_slope(lx, ly);
  return result;
}

double tail_functional(TailFunctional f, std::span<const double> z) {
  return f == TailFunctional::Zero ? 0.0 : z[0] - 0.5;
}

void TailExperiment::validate() const {
  if (n_grid.size() < 2) throw DomainError("tail experiments need at least two window sizes");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (!(n_grid[i] > n_grid[i - 1])) throw DomainError("n_grid must be strictly increasing");
  if (replicates < 1000) throw DomainError("tail experiments need at least 1000 replicates");
  const StationaryMeasure nu = covariates.stationary_measure();
  const Quadrature q = make_quadrature(nu, covariates.dim_d, 1 << 12);
  double mean = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) mean += q.weights[i] * tail_functional(functional, q.point(i));
  if (std::abs(mean) > 1e-6) throw DomainError("tail functional is not centred under the stationary measure");
}

TailResult run_tails(const TailExperiment& exp) {
  exp.validate();
  const bool tessellation = exp.covariates.family == CovariateSpec::Family::Voronoi;
  TailResult result;
  result.statistics.resize(exp.n_grid.size());
  for (std::size_t ni = 0; ni < exp.n_grid.size(); ++ni) {
    const CovariateSimulator sim(exp.covariates, exp.n_grid[ni]);
    auto& x = result.statistics[ni];
    x.resize(exp.replicates);
    parallel_for(exp.replicates, exp.threads, [&](std::size_t rep) {
      const CovariateField f = sim.sample(stream_seed(exp.seed, {ni, rep}));
      double s = 0.0;
      for (std::size_t c = 0; c < f.cell_count(); ++c) s += tail_functional(exp.functional, f.at(c));
      x[rep] = s / static_cast<double>(f.cell_count());
    });
  }
  std::vector<double> r0 = exp.r_grid;
  if (r0.empty()) {
    const auto& x = result.statistics.front();
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double sd = std::sqrt(ss / static_cast<double>(x.size()));
    for (double t = 0.5; t <= 3.0 + 1e-9; t += 0.25) r0.push_back(t * sd);
  }
  result.min_r_squared = 1.0;
  for (std::size_t ni = 0; ni < exp.n_grid.size(); ++ni) {
    const double n = exp.n_grid[ni];
    const double scale = exp.scale_r ? std::sqrt(exp.n_grid.front() / n) : 1.0;
    const auto& x = result.statistics[ni];
    std::vector<double> raw;
    std::vector<double> rs;
    std::vector<std::size_t> hits;
    for (double r : r0) {
      const double rr = r * scale;
      std::size_t h = 0;
      for (double v : x) h += std::abs(v) >= rr;
      rs.push_back(rr);
      hits.push_back(h);
      raw.push_back(static_cast<double>(h) / static_cast<double>(x.size()));
    }
    const auto smooth = isotonic_nonincreasing(raw);
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      result.rows.push_back({n, rs[i], raw[i], smooth[i], hits[i]});
      if (smooth[i] <= 0.0) continue;
      fx.push_back(tessellation ? std::min(rs[i], rs[i] * rs[i]) : rs[i] * rs[i]);
      fy.push_back(std::log(smooth[i]));
    }
    TailFit tf;
    tf.n = n;
    if (fx.size() >= 3) {
      tf.fit = fit_slope(fx, fy);
      tf.rate = -tf.fit.slope;
      result.min_r_squared = std::min(result.min_r_squared, tf.fit.r_squared);
    } else {
      result.min_r_squared = 0.0;
    }
    result.fits.push_back(tf);
  }
  for (std::size_t i = 1; i < result.fits.size(); ++i) {
    const double ratio = result.fits[i].rate / result.fits[i - 1].rate;
    const double expected = result.fits[i].n / result.fits[i - 1].n;
    const double err = std::abs(ratio / expected - 1.0);
    result.rate_ratio_error.push_back(err);
    result.max_ratio_error = std::max(result.max_ratio_error, err);
  }
  return result;
}

ErgodicResult run_ergodic(const ErgodicExperiment& exp) {
  if (exp.n_grid.size() < 3) throw DomainError("ergodic experiments need at least 3 window sizes");
  const IntensityFn rho(exp.rho), rho0(exp.rho0);
  const double limit = l1_nu(rho, rho0, exp.covariates.stationary_measure(), exp.covariates.dim_d);
  ErgodicResult res;
  res.n_grid = exp.n_grid;
  res.gaps.assign(exp.n_grid.size(), std::vector<double>(exp.replicates));
  std::vector<double> lx, ly;
  for (std::size_t ni = 0; ni < exp.n_grid.size(); ++ni) {
    const CovariateSimulator sim(exp.covariates, exp.n_grid[ni]);
    parallel_for(exp.replicates, exp.threads, [&](std::size_t rep) {
      const CovariateField f = sim.sample(stream_seed(exp.seed, {ni, rep}));
      res.gaps[ni][rep] = std::abs(empirical_l1(rho, rho0, f) - limit);
    });
    const double m = std::accumulate(res.gaps[ni].begin(), res.gaps[ni].end(), 0.0) / exp.replicates;
    res.mean_gap.push_back(m);
    if (m > 0.0) {
      lx.push_back(std::log(exp.n_grid[ni]));
      ly.push_back(std::log(m));
    }
  }
  if (lx.size() >= 3) res.fit = fit_slope(lx, ly);
  return res;
}

Condition5Result run_condition5(const Condition5Experiment& exp) {
  const CovariateSimulator sim(exp.covariates, exp.n);
  Condition5Result res;
  res.depth = exp.depth.value_or(default_depth(exp.n, exp.delta));
  res.replicates = exp.replicates;
  const PartitionTree tree(exp.covariates.dim_d, res.depth);
  const double cd = exp.cd.value_or(tree.diameter_constant());
  const auto path = tree.locate(exp.z0);
  std::vector<char> pass(exp.replicates);
  res.min_alpha.resize(exp.replicates);
  res.max_deviation_ratio.resize(exp.replicates);
  parallel_for(exp.replicates, exp.threads, [&](std::size_t rep) {
    const CovariateField f = sim.sample(stream_seed(exp.seed, {rep}));
    const PushforwardMass mass = pushforward(f, tree);
    const DiagnosticsReport d = diagnostics(mass, path, exp.c1, cd, tree, f.nu, exp.n);
    pass[rep] = d.pass;
    res.min_alpha[rep] = *std::min_element(d.min_alpha.begin(), d.min_alpha.end());
    res.max_deviation_ratio[rep] = d.max_deviation_ratio;
  });
  for (char p : pass) {
    res.pass.push_back(p);
    res.passes += p;
  }
  return res;
}

void write_rate_csv(const RateResult& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "n,replicate,seed,loss,failed,points,detail\n";
  for (const auto& row : r.rows)
    out << row.n << ',' << row.replicate << ',' << row.seed << ',' << row.loss << ',' << row.failed << ','
        << row.points << ',' << row.extra << '\n';
  write_text(path, out.str());
}

void write_tail_csv(const TailResult& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "n,r,exceed_raw,exceed_isotonic,hits\n";
  for (const auto& row : r.rows)
    out << row.n << ',' << row.r << ',' << row.exceed_raw << ',' << row.exceed_smooth << ',' << row.hits << '\n';
  write_text(path, out.str());
}

void write_ergodic_csv(const ErgodicResult& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "n,replicate,gap\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    for (std::size_t k = 0; k < r.gaps[i].size(); ++k) out << r.n_grid[i] << ',' << k << ',' << r.gaps[i][k] << '\n';
  write_text(path, out.str());
}

}  // namespace coxbayes
