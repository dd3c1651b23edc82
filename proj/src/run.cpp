#include "coxbayes/run.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "coxbayes/bench.hpp"
#include "coxbayes/error.hpp"
#include "coxbayes/gpprior.hpp"
#include "coxbayes/hashing.hpp"
#include "coxbayes/metrics.hpp"
#include "coxbayes/pointproc.hpp"
#include "coxbayes/polyatree.hpp"
#include "coxbayes/svg.hpp"

namespace coxbayes {

namespace {

Json fit_json(const SlopeFit& f) {
  return {{"slope", f.slope},           {"stderr", f.stderr_slope}, {"intercept", f.intercept},
          {"r_squared", f.r_squared}, {"points", f.points}};
}

struct Context {
  const RunConfig& cfg;
  std::filesystem::path dir;
  RunOutcome& outcome;
  Json results = Json::object();
  bool check;

  void expect(bool ok, const std::string& what) {
    outcome.messages.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
    if (!ok && check) outcome.exit_code = kExitCheckFailed;
  }
};

struct Simulated {
  CovariateField field;
  PointPattern pattern;
};

Simulated simulate_data(const RunConfig& cfg) {
  if (cfg.input) {
    const std::filesystem::path in(*cfg.input);
    return {load_field(in / "field"), load_pattern(in / "points")};
  }
  const CovariateSimulator sim(cfg.covariates, cfg.n);
  CovariateField field = sim.sample(stream_seed(cfg.seed, {0}));
  const auto raster = intensity_raster(IntensityFn(cfg.truth), field);
  PointPattern pattern = sample_cox(raster, field.grid, stream_seed(cfg.seed, {1}));
  return {std::move(field), std::move(pattern)};
}

void cmd_simulate(Context& ctx) {
  const Simulated s = simulate_data(ctx.cfg);
  save_field(s.field, ctx.dir / "field");
  const std::string field_hash = git_blob_hash(read_text(ctx.dir / "field.bin"));
  save_pattern(s.pattern, ctx.dir / "points", field_hash);
  const auto raster = intensity_raster(IntensityFn(ctx.cfg.truth), s.field);
  double lambda = 0.0;
  for (double v : raster) lambda += v * s.field.grid.cell_volume();
  std::uint64_t cached = 0;
  for (auto k : s.pattern.cell_counts) cached += k;
  ctx.results = {{"points", s.pattern.size()}, {"expected_points", lambda}, {"cells", s.field.cell_count()}};
  ctx.expect(cached == s.pattern.size(), "cell count cache sums to the pattern size");
}

void cmd_fit_polya(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Simulated s = simulate_data(cfg);
  const double n = s.field.n();
  const int depth = cfg.polya.depth.value_or(default_depth(n, cfg.polya.delta));
  const PartitionTree tree(s.field.dim_d, depth);
  const PushforwardMass mass = pushforward(s.field, tree);
  const NodeCounts counts = bin_counts(s.pattern, s.field, tree);
  PolyaHyper hyper = PolyaHyper::defaults(depth, cfg.polya.L0, cfg.polya.spike_decay);
  std::fill(hyper.alpha.begin(), hyper.alpha.end(), cfg.polya.alpha);
  if (cfg.polya.q) std::fill(hyper.q.begin(), hyper.q.end(), *cfg.polya.q);
  hyper.rho_shape = cfg.polya.rho_shape;
  hyper.rho_rate = cfg.polya.rho_rate;
  const PolyaPosterior post = exact_posterior(counts, mass, hyper, n);
  save_posterior(post, ctx.dir / "posterior.json");
  const std::vector<double> levels{0.05, 0.5, 0.95};
  const auto summary = pointwise_summary(post, tree, cfg.z0, cfg.polya.draws, levels, stream_seed(cfg.seed, {2}));
  const HyperCheck hc = check_hyper(hyper, n);
  ctx.results = {{"depth", depth},
                 {"root_count", post.total_count},
                 {"pattern_size", s.pattern.size()},
                 {"z0", cfg.z0},
                 {"posterior_mean_at_z0", posterior_mean_at(post, tree, cfg.z0)},
                 {"mc_mean_at_z0", summary.mean},
                 {"quantiles_at_z0", {{"q05", summary.quantiles[0]}, {"q50", summary.quantiles[1]}, {"q95", summary.quantiles[2]}}},
                 {"truth_at_z0", IntensityFn(cfg.truth)(cfg.z0)},
                 {"hyper_check", {{"spike_floor", hc.spike_floor}, {"sparsity", hc.sparsity},
                                  {"worst_sparsity_ratio", hc.worst_sparsity_ratio},
                                  {"max_alpha_2l_over_n", hc.max_alpha_2l_over_n}}}};
  ctx.expect(post.total_count == s.pattern.size(), "posterior root count equals the pattern size");
}

void cmd_fit_gp(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Simulated s = simulate_data(cfg);
  const int d = s.field.dim_d;
  const double n = s.field.n();
  const int level = cfg.gp.level.value_or(std::clamp(
      static_cast<int>(std::ceil(std::log2(std::pow(n, 1.0 / (2.0 * cfg.gp.alpha + d))))), 1, max_wavelet_level(d)));
  const int top = cfg.gp.level_prior_c ? std::min(max_wavelet_level(d), level + 3) : level;
  auto basis = std::make_shared<const WaveletBasis>(cfg.gp.family, d, top);
  const WaveletTarget target(basis, s.field, s.pattern);
  WaveletState init;
  init.basis = basis;
  init.alpha = cfg.gp.alpha;
  init.level = level;
  init.link = cfg.gp.link;
  init.coefficients.assign(basis->count(level), 0.0);
  PcnOptions opt = cfg.gp.pcn;
  if (cfg.gp.level_prior_c) opt.level_prior = LevelPrior{*cfg.gp.level_prior_c, d, 1, top};
  const ChainResult chain = pcn_chain(init, target, opt, stream_seed(cfg.seed, {2}));
  save_chain(chain, ctx.dir);
  Json res{{"level", level}, {"acceptance_rate", chain.acceptance_rate}, {"beta_final", chain.beta},
           {"samples", chain.samples.size()}, {"level_moves_accepted", chain.level_moves_accepted}};
  if (!chain.samples.empty()) {
    const Quadrature q = make_quadrature(s.field.nu, d, cfg.gp.quad_points);
    const IntensityFn truth(cfg.truth);
    double l1 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      double m = 0.0;
      for (const auto& st : chain.samples) m += st.rho(q.point(i));
      l1 += q.weights[i] * std::abs(m / chain.samples.size() - truth(q.point(i)));
    }
    res["posterior_mean_l1_nu"] = l1;
  }
  ctx.results = res;
  ctx.expect(chain.acceptance_rate > 0.0, "chain accepted at least one proposal after burn-in");
}

void cmd_rates(Context& ctx) {
  const RateExperiment e = rate_experiment(ctx.cfg);
  const RateResult r = run_rate(e);
  write_rate_csv(r, ctx.dir / "rates.csv");
  ctx.results = {{"model", to_string(e.model)},
                 {"loss", to_string(e.loss)},
                 {"theoretical_exponent", r.exponent},
                 {"n_grid", r.n_grid},
                 {"mean_loss", r.mean_loss},
                 {"failures", r.failures},
                 {"fit", fit_json(r.fit)}};
  write_text(ctx.dir / "rates.svg",
             render_svg({{"mean loss", r.n_grid, r.mean_loss, true}},
                        {"posterior loss against n", "n", "mean loss", true, true}));
  if (e.model == RateModel::Polya) {
    ctx.expect(std::abs(r.fit.slope - r.exponent) <= ctx.cfg.check.slope_tolerance,
               "fitted slope " + std::to_string(r.fit.slope) + " within tolerance of " + std::to_string(r.exponent));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < r.mean_loss.size(); ++i) decreasing = decreasing && r.mean_loss[i] < r.mean_loss[i - 1];
  ctx.expect(decreasing, "mean loss strictly decreasing in n");
}

void cmd_tails(Context& ctx) {
  const TailExperiment e = tail_experiment(ctx.cfg);
  const TailResult r = run_tails(e);
  write_tail_csv(r, ctx.dir / "tails.csv");
  Json fits = Json::array();
  std::vector<PlotSeries> series;
  for (const auto& f : r.fits) {
    fits.push_back({{"n", f.n}, {"rate", f.rate}, {"fit", fit_json(f.fit)}});
    PlotSeries ps{"n=" + std::to_string(static_cast<long long>(f.n)), {}, {}, true};
    for (const auto& row : r.rows)
      if (row.n == f.n && row.exceed_smooth > 0) {
        ps.x.push_back(row.r);
        ps.y.push_back(row.exceed_smooth);
      }
    series.push_back(ps);
  }
  ctx.results = {{"family", to_string(e.covariates.family)},
                 {"fits", fits},
                 {"rate_ratio_error", r.rate_ratio_error},
                 {"min_r_squared", r.min_r_squared}};
  write_text(ctx.dir / "tails.svg", render_svg(series, {"exceedance probability", "r", "P(|X| >= r)", false, true}));
  ctx.expect(r.min_r_squared > ctx.cfg.check.min_r_squared, "log-exceedance linearity R^2 above threshold");
  ctx.expect(r.max_ratio_error <= ctx.cfg.check.max_ratio_error, "fitted rate scales linearly with n");
}

void cmd_ergodic(Context& ctx) {
  const ErgodicExperiment e = ergodic_experiment(ctx.cfg);
  const ErgodicResult r = run_ergodic(e);
  write_ergodic_csv(r, ctx.dir / "ergodic.csv");
  ctx.results = {{"n_grid", r.n_grid}, {"mean_gap", r.mean_gap}, {"fit", fit_json(r.fit)}, {"expected_slope", -0.5}};
  write_text(ctx.dir / "ergodic.svg",
             render_svg({{"mean gap", r.n_grid, r.mean_gap, true}}, {"ergodic gap", "n", "mean gap", true, true}));
  ctx.expect(std::abs(r.fit.slope + 0.5) <= ctx.cfg.check.slope_tolerance, "gap slope within tolerance of -1/2");
}

void cmd_diagnose(Context& ctx) {
  const Condition5Experiment e = condition5_experiment(ctx.cfg);
  const Condition5Result r = run_condition5(e);
  std::ostringstream csv;
  csv.precision(17);
  csv << "replicate,pass,min_alpha,max_deviation_ratio\n";
  for (std::size_t i = 0; i < r.replicates; ++i)
    csv << i << ',' << r.pass[i] << ',' << r.min_alpha[i] << ',' << r.max_deviation_ratio[i] << '\n';
  write_text(ctx.dir / "diagnose.csv", csv.str());
  const double rate = static_cast<double>(r.passes) / static_cast<double>(r.replicates);
  ctx.results = {{"depth", r.depth}, {"passes", r.passes}, {"replicates", r.replicates}, {"pass_rate", rate}};
  ctx.expect(rate >= ctx.cfg.check.min_pass_rate, "diagnostics pass rate above threshold");
}

}  // namespace

Json read_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw ConfigError("/", e.what());
  }
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("/", "config file is empty");
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("/", std::string("malformed JSON: ") + e.what());
  }
}

RunOutcome run(const Json& config, const RunOptions& options) {
  Json effective = config;
  if (options.seed) effective["seed"] = *options.seed;
  if (options.threads) effective["threads"] = *options.threads;
  const RunConfig cfg = parse_config(effective);
  effective["seed"] = cfg.seed;

  Json hashed = effective;
  hashed.erase("threads");
  const std::string config_text = hashed.dump(2) + "\n";
  const std::string hash = git_blob_hash(config_text);
  RunOutcome outcome;
  outcome.dir = options.out / ("run-" + hash.substr(0, 12));
  if (std::filesystem::exists(outcome.dir))
    throw Error("run directory " + outcome.dir.string() + " already exists; runs are never overwritten");
  std::filesystem::create_directories(outcome.dir);
  write_text(outcome.dir / "config.json", config_text);

  Context ctx{cfg, outcome.dir, outcome, Json::object(), options.check};
  if (cfg.command == "simulate") cmd_simulate(ctx);
  else if (cfg.command == "fit-polya") cmd_fit_polya(ctx);
  else if (cfg.command == "fit-gp") cmd_fit_gp(ctx);
  else if (cfg.command == "rates") cmd_rates(ctx);
  else if (cfg.command == "tails") cmd_tails(ctx);
  else if (cfg.command == "diagnose") cmd_diagnose(ctx);
  else if (cfg.command == "ergodic") cmd_ergodic(ctx);

  Json outputs = Json::object();
  for (const auto& entry : std::filesystem::directory_iterator(outcome.dir)) {
    if (!entry.is_regular_file()) continue;
    outputs[entry.path().filename().string()] = git_blob_hash(read_text(entry.path()));
  }
  Json inputs = {{"config", hash}};
  if (cfg.input) {
    for (const char* f : {"field.json", "field.bin", "points.csv", "points.json"}) {
      const auto p = std::filesystem::path(*cfg.input) / f;
      if (std::filesystem::exists(p)) inputs[f] = git_blob_hash(read_text(p));
    }
  }
  Json checks = Json::array();
  for (const auto& m : outcome.messages) checks.push_back(m);
  Json manifest{{"command", cfg.command}, {"config_hash", hash},      {"seed", cfg.seed},  {"inputs", inputs},
                {"outputs", outputs},     {"results", ctx.results}, {"checks", checks}};
  write_text(outcome.dir / "manifest.json", manifest.dump(2) + "\n");
  outcome.summary = ctx.results;
  return outcome;
}

}  // namespace coxbayes
