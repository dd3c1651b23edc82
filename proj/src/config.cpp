#include "coxbayes/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "coxbayes/error.hpp"

namespace coxbayes {

namespace {

class Checker {
 public:
  std::vector<ConfigViolation> out;

  void fail(const std::string& path, const std::string& msg) { out.push_back({path.empty() ? "/" : path, msg}); }

  bool object(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
    return true;
  }

  // Numbers: returns the value when present and well-typed.
  std::optional<double> number(const Json& j, const std::string& key, const std::string& path,
                               std::function<bool(double)> ok = {}, const std::string& bound = "") {
    if (!j.contains(key)) return std::nullopt;
    const Json& v = j.at(key);
    if (!v.is_number()) {
      fail(path + "/" + key, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (ok && !ok(x)) {
      fail(path + "/" + key, "value " + v.dump() + " violates " + bound);
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const Json& j, const std::string& key, const std::string& path, long long lo,
                                   long long hi) {
    if (!j.contains(key)) return std::nullopt;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) {
      fail(path + "/" + key, "expected an integer");
      return std::nullopt;
    }
    const long long x = v.get<long long>();
    if (x < lo || x > hi) {
      fail(path + "/" + key, "value " + v.dump() + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  void boolean(const Json& j, const std::string& key, const std::string& path) {
    if (j.contains(key) && !j.at(key).is_boolean()) fail(path + "/" + key, "expected true or false");
  }

  void choice(const Json& j, const std::string& key, const std::string& path, const std::vector<std::string>& options,
              bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "/" + key, "required key missing");
      return;
    }
    const Json& v = j.at(key);
    if (!v.is_string() || std::find(options.begin(), options.end(), v.get<std::string>()) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      fail(path + "/" + key, "expected one of: " + list);
    }
  }

  std::optional<std::vector<double>> numbers(const Json& j, const std::string& key, const std::string& path,
                                             std::function<bool(double)> ok, const std::string& bound) {
    if (!j.contains(key)) return std::nullopt;
    const Json& v = j.at(key);
    if (!v.is_array()) {
      fail(path + "/" + key, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> xs;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(path + "/" + key + "/" + std::to_string(i), "expected a number");
        return std::nullopt;
      }
      const double x = v[i].get<double>();
      if (ok && !ok(x)) {
        fail(path + "/" + key + "/" + std::to_string(i), "value " + v[i].dump() + " violates " + bound);
        return std::nullopt;
      }
      xs.push_back(x);
    }
    return xs;
  }
};

auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };

void check_marks(Checker& c, const Json& j, const std::string& p) {
  if (!c.object(j, p, {"law", "low", "high", "values", "probs"})) return;
  c.choice(j, "law", p, {"uniform", "discrete"}, true);
  const auto lo = c.number(j, "low", p);
  const auto hi = c.number(j, "high", p);
  if (lo && hi && !(*hi > *lo)) c.fail(p + "/high", "must exceed low");
  const auto values = c.numbers(j, "values", p, {}, "");
  const auto probs = c.numbers(j, "probs", p, unit, "0 <= p <= 1");
  if (j.value("law", "") == "discrete") {
    if (!values || !probs || values->size() != probs->size() || values->empty())
      c.fail(p + "/probs", "discrete marks need matching non-empty values and probs");
    else {
      double s = 0.0;
      for (double x : *probs) s += x;
      if (std::abs(s - 1.0) > 1e-9) c.fail(p + "/probs", "probabilities must sum to 1");
    }
  }
}

void check_covariates(Checker& c, const Json& j, const std::string& p) {
  if (!c.object(j, p, {"family", "window_dim", "dim_d", "spacing", "kernels", "voronoi"})) return;
  c.choice(j, "family", p, {"gaussian_cdf", "gaussian", "voronoi"});
  const auto D = c.integer(j, "window_dim", p, 1, 3);
  c.integer(j, "dim_d", p, 1, 8);
  c.number(j, "spacing", p, positive, "spacing > 0");
  if (j.contains("kernels")) {
    const Json& ks = j.at("kernels");
    if (!ks.is_array() || ks.empty()) {
      c.fail(p + "/kernels", "expected a non-empty array of kernels");
    } else {
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const std::string kp = p + "/kernels/" + std::to_string(i);
        if (!c.object(ks[i], kp, {"family", "length_scale", "tail_exponent"})) continue;
        c.choice(ks[i], "family", kp, {"squared_exponential", "exponential", "cauchy"}, true);
        c.number(ks[i], "length_scale", kp, positive, "length_scale > 0");
        const double dim = static_cast<double>(D.value_or(1));
        c.number(ks[i], "tail_exponent", kp, [dim](double x) { return x > dim; },
                 "tail_exponent > window_dim (integrable kernel)");
      }
    }
  }
  if (j.contains("voronoi")) {
    const Json& v = j.at("voronoi");
    const std::string vp = p + "/voronoi";
    if (c.object(v, vp, {"rate", "marks", "margin"})) {
      c.number(v, "rate", vp, positive, "rate > 0");
      c.number(v, "margin", vp, [](double x) { return x >= 0.0; }, "margin >= 0");
      if (v.contains("marks")) check_marks(c, v.at("marks"), vp + "/marks");
    }
  }
}

void check_truth(Checker& c, const Json& j, const std::string& p) {
  if (!c.object(j, p, {"kind", "c", "b", "z0", "beta"})) return;
  c.choice(j, "kind", p, {"constant", "linear", "step", "kink", "sine"}, true);
  c.number(j, "c", p);
  c.number(j, "b", p);
  c.number(j, "z0", p, unit, "0 <= z0 <= 1");
  c.number(j, "beta", p, positive, "beta > 0");
}

void check_polya(Checker& c, const Json& j, const std::string& p) {
  if (!c.object(j, p, {"L0", "delta", "depth", "alpha", "spike_decay", "q", "rho_shape", "rho_rate", "draws"})) return;
  c.integer(j, "L0", p, 0, 23);
  c.number(j, "delta", p, positive, "delta > 0");
  c.integer(j, "depth", p, 1, 23);
  c.number(j, "alpha", p, positive, "slab concentration alpha > 0");
  c.number(j, "spike_decay", p, positive, "spike decay t0 > 0");
  c.number(j, "q", p, [](double x) { return x > 0.0 && x <= 1.0; }, "spike weight bound 0 < q <= 1");
  c.number(j, "rho_shape", p, positive, "Gamma shape > 0");
  c.number(j, "rho_rate", p, positive, "Gamma rate > 0");
  c.integer(j, "draws", p, 1, 100000000);
}

void check_gp(Checker& c, const Json& j, const std::string& p) {
  if (!c.object(j, p, {"wavelet", "alpha", "level", "link", "beta", "iters", "burn_in", "thin", "adapt",
                       "adapt_window", "level_prior_c", "snapshot_every", "quad_points"}))
    return;
  c.choice(j, "wavelet", p, {"haar", "daubechies4"});
  c.number(j, "alpha", p, positive, "alpha > 0");
  c.integer(j, "level", p, 1, 18);
  if (j.contains("link")) {
    const std::string lp = p + "/link";
    const Json& l = j.at("link");
    if (c.object(l, lp, {"kind", "m1", "a"})) {
      c.choice(l, "kind", lp, {"exp", "sigmoid", "mollified_ramp"}, true);
      c.number(l, "m1", lp, positive, "M1 > 0");
      c.number(l, "a", lp, [](double x) { return x > 1.0; }, "a > 1");
    }
  }
  c.number(j, "beta", p, [](double x) { return x > 0.0 && x <= 1.0; }, "0 < beta <= 1");
  c.integer(j, "iters", p, 1, 1000000000);
  c.integer(j, "burn_in", p, 0, 1000000000);
  c.integer(j, "thin", p, 1, 1000000000);
  c.boolean(j, "adapt", p);
  c.integer(j, "adapt_window", p, 1, 1000000);
  c.number(j, "level_prior_c", p, positive, "C_L > 0");
  c.integer(j, "snapshot_every", p, 0, 1000000000);
  c.integer(j, "quad_points", p, 1, 1 << 20);
}

}  // namespace

std::vector<ConfigViolation> validate_config(const Json& j) {
  Checker c;
  if (!c.object(j, "", {"command", "seed", "threads", "n", "n_grid", "replicates", "covariates", "truth", "truth_alt",
                        "model", "loss", "z0", "polya", "gp", "tails", "diagnose", "input", "check"}))
    return c.out;
  c.choice(j, "command", "", kCommands, true);
  if (j.contains("seed") && !j.at("seed").is_number_unsigned()) c.fail("/seed", "expected a nonnegative integer");
  c.integer(j, "threads", "", 1, 1024);
  c.number(j, "n", "", positive, "window volume n > 0");
  const auto grid = c.numbers(j, "n_grid", "", positive, "n > 0");
  if (grid) {
    for (std::size_t i = 1; i < grid->size(); ++i)
      if (!((*grid)[i] > (*grid)[i - 1])) c.fail("/n_grid/" + std::to_string(i), "n_grid must be strictly increasing");
  }
  c.integer(j, "replicates", "", 1, 100000000);
  if (j.contains("covariates")) check_covariates(c, j.at("covariates"), "/covariates");
  if (j.contains("truth")) check_truth(c, j.at("truth"), "/truth");
  if (j.contains("truth_alt")) check_truth(c, j.at("truth_alt"), "/truth_alt");
  c.choice(j, "model", "", {"polya", "gp"});
  c.choice(j, "loss", "", {"empirical_l1", "l1_nu", "pointwise"});
  c.numbers(j, "z0", "", unit, "0 <= z0 <= 1");
  if (j.contains("polya")) check_polya(c, j.at("polya"), "/polya");
  if (j.contains("gp")) check_gp(c, j.at("gp"), "/gp");
  if (j.contains("tails")) {
    const Json& t = j.at("tails");
    if (c.object(t, "/tails", {"functional", "r_grid", "scale_r"})) {
      c.choice(t, "functional", "/tails", {"centered_identity", "zero"});
      c.numbers(t, "r_grid", "/tails", positive, "r > 0");
      c.boolean(t, "scale_r", "/tails");
    }
  }
  if (j.contains("diagnose")) {
    const Json& t = j.at("diagnose");
    if (c.object(t, "/diagnose", {"c1", "cd", "delta", "depth"})) {
      c.number(t, "c1", "/diagnose", [](double x) { return x > 0.0 && x < 0.5; }, "0 < c1 < 1/2");
      c.number(t, "cd", "/diagnose", positive, "C_d > 0");
      c.number(t, "delta", "/diagnose", positive, "delta > 0");
      c.integer(t, "depth", "/diagnose", 1, 23);
    }
  }
  if (j.contains("input") && !j.at("input").is_string()) c.fail("/input", "expected a path string");
  if (j.contains("check")) {
    const Json& t = j.at("check");
    if (c.object(t, "/check", {"slope_tolerance", "min_r_squared", "max_ratio_error", "min_pass_rate"})) {
      c.number(t, "slope_tolerance", "/check", positive, "tolerance > 0");
      c.number(t, "min_r_squared", "/check", unit, "0 <= R^2 <= 1");
      c.number(t, "max_ratio_error", "/check", positive, "tolerance > 0");
      c.number(t, "min_pass_rate", "/check", unit, "0 <= rate <= 1");
    }
  }

  const std::string cmd = j.value("command", "");
  const std::size_t grid_len = grid ? grid->size() : 0;
  if ((cmd == "rates" || cmd == "ergodic") && grid_len < 3) c.fail("/n_grid", cmd + " needs at least 3 window sizes");
  if (cmd == "tails") {
    if (grid_len < 2) c.fail("/n_grid", "tails needs at least 2 window sizes");
    if (j.value("replicates", 0LL) < 1000) c.fail("/replicates", "tails needs at least 1000 replicates");
  }
  if (cmd == "ergodic" && !j.contains("truth_alt")) c.fail("/truth_alt", "ergodic needs a second intensity");
  if (j.contains("covariates") && j.at("covariates").is_object()) {
    const Json& cv = j.at("covariates");
    const bool in_unit = cv.value("family", "gaussian_cdf") != "gaussian";
    if (!in_unit && (cmd == "fit-polya" || cmd == "fit-gp" || cmd == "rates" || cmd == "diagnose"))
      c.fail("/covariates/family", cmd + " needs covariates in [0,1]^d; use gaussian_cdf");
    const int d = cv.value("dim_d", 1);
    if (j.contains("z0") && j.at("z0").is_array() && j.at("z0").size() != static_cast<std::size_t>(d))
      c.fail("/z0", "z0 needs dim_d = " + std::to_string(d) + " coordinates");
    if (cv.contains("voronoi") && cv.at("voronoi").is_object() && cv.at("voronoi").contains("marks") &&
        cv.at("voronoi").at("marks").value("law", "") == "discrete" && d != 1)
      c.fail("/covariates/voronoi/marks/law", "discrete marks need dim_d = 1");
  }
  return c.out;
}

namespace {

AnalyticIntensity truth_from(const Json& t) {
  AnalyticIntensity a;
  a.kind = analytic_kind_from_string(t.at("kind").get<std::string>());
  a.c = t.value("c", 1.0);
  a.b = t.value("b", 0.0);
  a.z0 = t.value("z0", 0.5);
  return a;
}

}  // namespace

RunConfig parse_config(const Json& j) {
  const auto violations = validate_config(j);
  if (!violations.empty()) throw ConfigError(violations.front().path, violations.front().message);
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.seed = j.value("seed", std::uint64_t{1});
  c.threads = j.value("threads", 1);
  c.n = j.value("n", 1024.0);
  if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<double>>();
  c.replicates = j.value("replicates", std::size_t{1});
  if (j.contains("covariates")) {
    const Json& cv = j.at("covariates");
    const std::string fam = cv.value("family", "gaussian_cdf");
    c.covariates.family = fam == "voronoi"   ? CovariateSpec::Family::Voronoi
                          : fam == "gaussian" ? CovariateSpec::Family::GaussianRaw
                                              : CovariateSpec::Family::GaussianCdf;
    c.covariates.window_dim = cv.value("window_dim", 1);
    c.covariates.dim_d = cv.value("dim_d", 1);
    c.covariates.spacing = cv.value("spacing", 0.5);
    if (cv.contains("kernels")) {
      c.covariates.kernels.clear();
      for (const auto& k : cv.at("kernels")) c.covariates.kernels.push_back(kernel_from_json(k));
    }
    if (cv.contains("voronoi")) {
      const Json& v = cv.at("voronoi");
      c.covariates.voronoi_rate = v.value("rate", 1.0);
      if (v.contains("marks")) c.covariates.marks = mark_law_from_json(v.at("marks"));
      if (v.contains("margin")) c.covariates.margin = v.at("margin").get<double>();
    }
  }
  if (j.contains("truth")) {
    c.truth = truth_from(j.at("truth"));
    c.truth_beta = j.at("truth").value("beta", 1.0);
  }
  if (j.contains("truth_alt")) c.truth_alt = truth_from(j.at("truth_alt"));
  c.model = j.value("model", "polya");
  const std::string loss = j.value("loss", "pointwise");
  c.loss = loss == "l1_nu" ? LossKind::L1Nu : loss == "empirical_l1" ? LossKind::EmpiricalL1 : LossKind::Pointwise;
  if (j.contains("z0")) c.z0 = j.at("z0").get<std::vector<double>>();
  else c.z0.assign(c.covariates.dim_d, 0.5);
  if (j.contains("polya")) {
    const Json& p = j.at("polya");
    c.polya.L0 = p.value("L0", 2);
    c.polya.delta = p.value("delta", 0.1);
    if (p.contains("depth")) c.polya.depth = p.at("depth").get<int>();
    c.polya.alpha = p.value("alpha", 1.0);
    c.polya.spike_decay = p.value("spike_decay", 1.0);
    if (p.contains("q")) c.polya.q = p.at("q").get<double>();
    c.polya.rho_shape = p.value("rho_shape", 1.0);
    c.polya.rho_rate = p.value("rho_rate", 1.0);
    c.polya.draws = p.value("draws", std::size_t{200});
  }
  if (j.contains("gp")) {
    const Json& g = j.at("gp");
    c.gp.family = wavelet_family_from_string(g.value("wavelet", "haar"));
    c.gp.alpha = g.value("alpha", 1.0);
    if (g.contains("level")) c.gp.level = g.at("level").get<int>();
    if (g.contains("link")) {
      const Json& l = g.at("link");
      c.gp.link = link_from_string(l.at("kind").get<std::string>(), l.value("m1", 1.0), l.value("a", 2.0));
    }
    c.gp.pcn.beta = g.value("beta", 0.5);
    c.gp.pcn.iters = g.value("iters", std::size_t{2000});
    c.gp.pcn.burn_in = g.value("burn_in", std::size_t{500});
    c.gp.pcn.thin = g.value("thin", std::size_t{10});
    c.gp.pcn.adapt = g.value("adapt", true);
    c.gp.pcn.adapt_window = g.value("adapt_window", std::size_t{50});
    c.gp.pcn.snapshot_every = g.value("snapshot_every", std::size_t{0});
    if (g.contains("level_prior_c")) c.gp.level_prior_c = g.at("level_prior_c").get<double>();
    c.gp.quad_points = g.value("quad_points", std::size_t{4096});
  }
  if (j.contains("tails")) {
    const Json& t = j.at("tails");
    c.functional = t.value("functional", "centered_identity") == "zero" ? TailFunctional::Zero
                                                                        : TailFunctional::CenteredIdentity;
    if (t.contains("r_grid")) c.r_grid = t.at("r_grid").get<std::vector<double>>();
    c.scale_r = t.value("scale_r", true);
  }
  if (j.contains("diagnose")) {
    const Json& t = j.at("diagnose");
    c.c1 = t.value("c1", 0.1);
    if (t.contains("cd")) c.cd = t.at("cd").get<double>();
    c.polya.delta = t.value("delta", c.polya.delta);
    if (t.contains("depth")) c.polya.depth = t.at("depth").get<int>();
  }
  if (j.contains("input")) c.input = j.at("input").get<std::string>();
  if (j.contains("check")) {
    const Json& t = j.at("check");
    c.check.slope_tolerance = t.value("slope_tolerance", c.check.slope_tolerance);
    c.check.min_r_squared = t.value("min_r_squared", c.check.min_r_squared);
    c.check.max_ratio_error = t.value("max_ratio_error", c.check.max_ratio_error);
    c.check.min_pass_rate = t.value("min_pass_rate", c.check.min_pass_rate);
  }
  return c;
}

RateExperiment rate_experiment(const RunConfig& c) {
  RateExperiment e;
  e.model = c.model == "gp" ? RateModel::Gp : RateModel::Polya;
  e.truth = c.truth;
  e.beta = c.truth_beta;
  e.covariates = c.covariates;
  e.n_grid = c.n_grid;
  e.replicates = c.replicates;
  e.loss = c.loss;
  e.z0 = c.z0;
  e.seed = c.seed;
  e.threads = c.threads;
  e.polya = c.polya;
  e.gp = c.gp;
  return e;
}

TailExperiment tail_experiment(const RunConfig& c) {
  TailExperiment e;
  e.covariates = c.covariates;
  e.functional = c.functional;
  e.n_grid = c.n_grid;
  e.r_grid = c.r_grid;
  e.scale_r = c.scale_r;
  e.replicates = c.replicates;
  e.seed = c.seed;
  e.threads = c.threads;
  return e;
}

ErgodicExperiment ergodic_experiment(const RunConfig& c) {
  ErgodicExperiment e;
  e.covariates = c.covariates;
  e.rho = c.truth_alt;
  e.rho0 = c.truth;
  e.n_grid = c.n_grid;
  e.replicates = c.replicates;
  e.seed = c.seed;
  e.threads = c.threads;
  return e;
}

Condition5Experiment condition5_experiment(const RunConfig& c) {
  Condition5Experiment e;
  e.covariates = c.covariates;
  e.n = c.n;
  e.delta = c.polya.delta;
  e.depth = c.polya.depth;
  e.c1 = c.c1;
  e.cd = c.cd;
  e.z0 = c.z0;
  e.replicates = c.replicates;
  e.seed = c.seed;
  e.threads = c.threads;
  return e;
}

}  // namespace coxbayes
