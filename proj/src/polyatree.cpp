#include "coxbayes/polyatree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coxbayes/error.hpp"
#include "coxbayes/io.hpp"
#include "coxbayes/rng.hpp"

namespace coxbayes {

namespace {

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

bool degenerate(double alpha_left) { return !(alpha_left > 0.0 && alpha_left < 1.0); }

}  // namespace

PolyaHyper PolyaHyper::defaults(int Ln, int L0, double t0) {
  PolyaHyper h;
  h.L0 = L0;
  h.Ln = Ln;
  for (int l = 0; l < Ln; ++l) {
    h.alpha.push_back(1.0);
    h.q.push_back(std::clamp(1.0 - std::exp2(-t0 * l), 0.5, 1.0 - std::exp2(-20)));
    h.beta1.push_back(1.0);
    h.beta2.push_back(1.0);
  }
  return h;
}

void PolyaHyper::validate() const {
  auto fail = [](const std::string& what) { throw DomainError(what); };
  if (Ln < 1) fail("Ln: tree depth must be at least 1");
  if (L0 < 0) fail("L0: must be nonnegative");
  const auto levels = static_cast<std::size_t>(Ln);
  if (alpha.size() != levels) fail("alpha: need one slab concentration per level 0..Ln-1");
  if (q.size() != levels) fail("q: need one spike weight per level 0..Ln-1");
  if (beta1.size() != levels || beta2.size() != levels) fail("beta1/beta2: need one entry per level 0..Ln-1");
  for (std::size_t l = 0; l < levels; ++l) {
    if (!(alpha[l] > 0.0) || !std::isfinite(alpha[l]))
      fail("alpha[" + std::to_string(l) + "]: slab concentration must be positive");
    if (!(q[l] > 0.0 && q[l] <= 1.0))
      fail("q[" + std::to_string(l) + "]: spike weight must lie in (0, 1]");
    if (!(beta1[l] > 0.0 && beta2[l] > 0.0)) fail("beta1/beta2[" + std::to_string(l) + "]: must be positive");
  }
  if (!(rho_shape > 0.0 && rho_rate > 0.0)) fail("rho_star: Gamma shape and rate must be positive");
}

int default_depth(double n, double delta) {
  const double leaves = std::floor(delta * n / std::log(n));
  if (!(leaves >= 2.0)) return 1;
  return std::max(1, static_cast<int>(std::floor(std::log2(leaves))));
}

HyperCheck check_hyper(const PolyaHyper& hyper, double n, double t, double c2) {
  HyperCheck c;
  c.spike_floor = true;
  c.sparsity = true;
  for (int l = std::max(0, hyper.L0); l < hyper.Ln; ++l) {
    const double ratio = (1.0 - hyper.q[l]) * hyper.alpha[l] * std::exp2(l * t);
    c.worst_sparsity_ratio = std::max(c.worst_sparsity_ratio, ratio);
    if (ratio > 1.0 + 1e-12) c.sparsity = false;
    if (hyper.q[l] < c2) c.spike_floor = false;
    c.max_alpha_2l_over_n = std::max(c.max_alpha_2l_over_n, hyper.alpha[l] * std::exp2(l) / n);
  }
  return c;
}

double log_bayes_factor(double n_left, double n_right, double alpha_left, double q, double concentration) {
  const double al = alpha_left;
  const double ar = 1.0 - alpha_left;
  double lbf = std::log1p(-q) - std::log(q);
  lbf += log_beta_fn(n_left + concentration * al, n_right + concentration * ar) -
         log_beta_fn(concentration * al, concentration * ar);
  if (n_left > 0) lbf -= n_left * std::log(al);
  if (n_right > 0) lbf -= n_right * std::log(ar);
  return lbf;
}

double spike_probability(double n_left, double n_right, double alpha_left, double q, double concentration) {
  if (q >= 1.0) return 1.0;
  const double lbf = log_bayes_factor(n_left, n_right, alpha_left, q, concentration);
  if (lbf > 0.0) {
    const double e = std::exp(-lbf);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(lbf));
}

PolyaPosterior exact_posterior(const NodeCounts& counts, const PushforwardMass& mass, const PolyaHyper& hyper,
                               double n) {
  hyper.validate();
  if (counts.max_level != mass.max_level || hyper.Ln != mass.max_level)
    throw InvariantError("counts, mass and hyperparameters disagree on the tree depth");
  PolyaPosterior post;
  post.dim_d = mass.dim_d;
  post.max_level = mass.max_level;
  post.n = n;
  post.total_count = counts.total();
  post.rho_shape = hyper.rho_shape + static_cast<double>(counts.total());
  post.rho_rate = hyper.rho_rate + n;
  const std::size_t internal = (std::size_t{1} << mass.max_level) - 1;
  post.nodes.resize(internal);
  for (std::size_t id = 0; id < internal; ++id) {
    const NodeIndex node = NodeIndex::from_id(id);
    NodePosterior& np = post.nodes[id];
    const double al = mass.alpha(node.left());
    np.alpha_left = std::isnan(al) ? 0.5 : al;
    if (mass.is_zero(node) || degenerate(al)) {
      np.frozen = true;
      np.spike_prob = 1.0;
      continue;
    }
    const auto nl = static_cast<double>(counts[node.left()]);
    const auto nr = static_cast<double>(counts[node.right()]);
    const int l = node.level;
    if (l >= hyper.L0) {
      const double c = hyper.alpha[l];
      np.spike_slab = true;
      np.a = nl + c * al;
      np.b = nr + c * (1.0 - al);
      np.spike_prob = spike_probability(nl, nr, al, hyper.q[l], c);
    } else {
      np.a = nl + hyper.beta1[l];
      np.b = nr + hyper.beta2[l];
      np.spike_prob = 0.0;
    }
  }
  return post;
}

TreeIntensity sample_tree(const PolyaPosterior& post, Rng& rng) {
  TreeIntensity t;
  const std::size_t internal = post.nodes.size();
  const std::size_t total = 2 * internal + 1;
  t.rho_star = rng.gamma(post.rho_shape, post.rho_rate);
  t.ybar.assign(total, 1.0);
  t.y.assign(total, 1.0);
  t.spike.assign(total, false);
  for (std::size_t id = 0; id < internal; ++id) {
    const NodePosterior& np = post.nodes[id];
    const std::size_t left = 2 * id + 1;
    const std::size_t right = 2 * id + 2;
    if (np.frozen) {
      t.ybar[left] = np.alpha_left;
      t.ybar[right] = 1.0 - np.alpha_left;
      t.spike[left] = t.spike[right] = true;
      continue;
    }
    const bool spike = np.spike_slab && rng.bernoulli(np.spike_prob);
    const double yl = spike ? np.alpha_left : rng.beta(np.a, np.b);
    t.ybar[left] = yl;
    t.ybar[right] = 1.0 - yl;
    t.spike[left] = t.spike[right] = spike;
    t.y[left] = spike ? 1.0 : yl / np.alpha_left;
    t.y[right] = spike ? 1.0 : (1.0 - yl) / (1.0 - np.alpha_left);
  }
  return t;
}

std::vector<TreeIntensity> posterior_sample(const PolyaPosterior& post, std::size_t count, std::uint64_t seed) {
  std::vector<TreeIntensity> draws;
  draws.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(stream_seed(seed, {i}));
    draws.push_back(sample_tree(post, rng));
  }
  return draws;
}

TreeIntensity prior_sample(const PartitionTree& tree, const PushforwardMass& mass, const PolyaHyper& hyper,
                           std::uint64_t seed) {
  NodeCounts none;
  none.max_level = tree.max_level();
  none.counts.assign(tree.node_count(), 0);
  PolyaHyper h = hyper;
  PolyaPosterior prior = exact_posterior(none, mass, h, 0.0);
  Rng rng(seed);
  return sample_tree(prior, rng);
}

double posterior_mean_factor(const PolyaPosterior& post, NodeIndex node) {
  if (node.is_root()) return 1.0;
  const NodePosterior& np = post.nodes[node.parent().id()];
  if (np.frozen) return 1.0;
  const bool left = node.last_bit() == 0;
  const double a_n = left ? np.alpha_left : 1.0 - np.alpha_left;
  const double slab_mean = (left ? np.a : np.b) / (np.a + np.b);
  return np.spike_prob + (1.0 - np.spike_prob) * slab_mean / a_n;
}

double posterior_mean_at(const PolyaPosterior& post, const PartitionTree& tree, std::span<const double> z0) {
  double m = post.rho_star_mean();
  for (const NodeIndex& node : tree.locate(z0)) m *= posterior_mean_factor(post, node);
  return m;
}

std::vector<double> pointwise_draws(const PolyaPosterior& post, const PartitionTree& tree, std::span<const double> z0,
                                    std::size_t draws, std::uint64_t seed) {
  const auto path = tree.locate(z0);
  std::vector<double> values(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    Rng rng(stream_seed(seed, {i}));
    double r = rng.gamma(post.rho_shape, post.rho_rate);
    for (const NodeIndex& node : path) {
      const NodePosterior& np = post.nodes[node.parent().id()];
      if (np.frozen) continue;
      if (np.spike_slab && rng.bernoulli(np.spike_prob)) continue;
      const double yl = rng.beta(np.a, np.b);
      r *= node.last_bit() == 0 ? yl / np.alpha_left : (1.0 - yl) / (1.0 - np.alpha_left);
    }
    values[i] = r;
  }
  return values;
}

PointwiseSummary pointwise_summary(const PolyaPosterior& post, const PartitionTree& tree,
                                   std::span<const double> z0, std::size_t draws, std::span<const double> levels,
                                   std::uint64_t seed) {
  std::vector<double> values = pointwise_draws(post, tree, z0, draws, seed);
  PointwiseSummary s;
  s.levels.assign(levels.begin(), levels.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = draws ? sum / static_cast<double>(draws) : std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  for (double p : levels) {
    if (values.empty()) {
      s.quantiles.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    s.quantiles.push_back(values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return s;
}

TruthCoefficients truth_coefficients(const IntensityFn& rho0, const CovariateField& field,
                                     const PartitionTree& tree, const PushforwardMass& mass,
                                     std::span<const double> z0, double gamma) {
  TruthCoefficients t;
  const double n = field.n();
  const std::size_t leaf_base = (std::size_t{1} << tree.max_level()) - 1;
  t.rho0_node.assign(tree.node_count(), 0.0);
  const double w = field.grid.cell_volume() / n;
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    const auto z = field.at(c);
    t.rho0_node[leaf_base + tree.locate_at(z, tree.max_level()).bits] += rho0(z) * w;
  }
  for (std::size_t i = leaf_base; i-- > 0;) t.rho0_node[i] = t.rho0_node[2 * i + 1] + t.rho0_node[2 * i + 2];
  t.y0.assign(tree.node_count(), 1.0);
  for (std::size_t id = 1; id < tree.node_count(); ++id) {
    const NodeIndex node = NodeIndex::from_id(id);
    const double parent = t.rho0_node[node.parent().id()];
    const double a = mass.alpha(node);
    t.y0[id] = parent > 0.0 && a > 0.0 ? t.rho0_node[id] / (parent * a) : std::numeric_limits<double>::quiet_NaN();
  }
  t.path = tree.locate(z0);
  for (const NodeIndex& node : t.path) {
    const double r = t.rho0_node[node.id()];
    if (!(r > 0.0)) throw DomainError("rho_0 integrates to zero over bin " + node.to_string() + " on the path");
    t.path_y0.push_back(t.y0[node.id()]);
    const double thr = gamma * std::sqrt(std::log(n) / (n * r));
    t.threshold.push_back(thr);
    if (std::abs(t.y0[node.id()] - 1.0) > thr) t.significant.push_back(node.level);
  }
  return t;
}

double factorized_log_likelihood(const TreeIntensity& t, const NodeCounts& counts, double n) {
  const auto total = static_cast<double>(counts.total());
  double ll = (total > 0 ? total * std::log(t.rho_star) : 0.0) - t.rho_star * n;
  for (std::size_t id = 1; id < counts.counts.size(); ++id)
    if (counts.counts[id] > 0) ll += static_cast<double>(counts.counts[id]) * std::log(t.y[id]);
  return ll;
}

void save_posterior(const PolyaPosterior& post, const std::filesystem::path& path) {
  Json nodes = Json::array();
  for (std::size_t id = 0; id < post.nodes.size(); ++id) {
    const auto& np = post.nodes[id];
    nodes.push_back({{"id", id},
                     {"eps", NodeIndex::from_id(id).to_string()},
                     {"alpha_left", np.alpha_left},
                     {"spike_prob", np.spike_prob},
                     {"beta_a", np.a},
                     {"beta_b", np.b},
                     {"frozen", np.frozen},
                     {"spike_slab", np.spike_slab}});
  }
  Json j{{"format", "coxbayes-polya-posterior"},
         {"tree", {{"dim_d", post.dim_d}, {"max_level", post.max_level}, {"split", "midpoint"}}},
         {"n", post.n},
         {"root_count", post.total_count},
         {"rho_star", {{"shape", post.rho_shape}, {"rate", post.rho_rate}}},
         {"nodes", nodes}};
  write_text(path, j.dump(1) + "\n");
}

PolyaPosterior load_posterior(const std::filesystem::path& path) {
  const Json j = Json::parse(read_text(path));
  PolyaPosterior p;
  p.dim_d = j.at("tree").at("dim_d").get<int>();
  p.max_level = j.at("tree").at("max_level").get<int>();
  p.n = j.at("n").get<double>();
  p.total_count = j.at("root_count").get<std::uint64_t>();
  p.rho_shape = j.at("rho_star").at("shape").get<double>();
  p.rho_rate = j.at("rho_star").at("rate").get<double>();
  for (const auto& e : j.at("nodes")) {
    NodePosterior np;
    np.alpha_left = e.at("alpha_left").get<double>();
    np.spike_prob = e.at("spike_prob").get<double>();
    np.a = e.at("beta_a").get<double>();
    np.b = e.at("beta_b").get<double>();
    np.frozen = e.at("frozen").get<bool>();
    np.spike_slab = e.at("spike_slab").get<bool>();
    p.nodes.push_back(np);
  }
  return p;
}

}  // namespace coxbayes
