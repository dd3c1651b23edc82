#include "coxbayes/gpprior.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "coxbayes/error.hpp"
#include "coxbayes/io.hpp"

namespace coxbayes {

double LevelPrior::log_weight(int l) const { return -c_l * std::exp2(l * dim_d) * l; }

double LevelPrior::log_mass(int l) const {
  if (l < l_min || l > l_max) return -std::numeric_limits<double>::infinity();
  double top = -std::numeric_limits<double>::infinity();
  for (int k = l_min; k <= l_max; ++k) top = std::max(top, log_weight(k));
  double sum = 0.0;
  for (int k = l_min; k <= l_max; ++k) sum += std::exp(log_weight(k) - top);
  return log_weight(l) - top - std::log(sum);
}

std::vector<double> LevelPrior::probabilities() const {
  std::vector<double> p;
  for (int l = l_min; l <= l_max; ++l) p.push_back(std::exp(log_mass(l)));
  return p;
}

WaveletState prior_sample_wavelet(std::shared_ptr<const WaveletBasis> basis, double alpha, int level, LinkFn link,
                                  std::uint64_t seed) {
  if (level < 1 || level > basis->max_level()) throw DomainError("wavelet level outside the basis depth");
  if (!(alpha > 0.0)) throw DomainError("smoothness alpha must be positive");
  WaveletState s;
  s.alpha = alpha;
  s.level = level;
  s.link = link;
  s.coefficients.resize(basis->count(level));
  s.basis = std::move(basis);
  Rng rng(seed);
  for (double& g : s.coefficients) g = rng.normal();
  return s;
}

double eval_rho(const WaveletState& state, std::span<const double> z) { return state.rho(z); }

WaveletTarget::WaveletTarget(std::shared_ptr<const WaveletBasis> basis, const CovariateField& field,
                             const PointPattern& pattern)
    : basis_(std::move(basis)) {
  const int d = field.dim_d;
  if (d != basis_->dim()) throw InvariantError("basis and field dimensions differ");
  if (pattern.cell_counts.size() != field.cell_count()) throw InvariantError("pattern and field grids differ");
  std::vector<std::vector<double>> points;
  if (basis_->family() == WaveletFamily::Haar) {
    const int res = basis_->max_level();
    const std::size_t per_axis = std::size_t{1} << res;
    std::size_t bins = 1;
    for (int a = 0; a < d; ++a) bins *= per_axis;
    volume_.assign(bins, 0.0);
    count_.assign(bins, 0.0);
    for (std::size_t c = 0; c < field.cell_count(); ++c) {
      const auto z = field.at(c);
      std::size_t b = 0;
      for (int a = 0; a < d; ++a) {
        const double t = std::ldexp(z[a], res);
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, t)), per_axis - 1);
        b = b * per_axis + k;
      }
      volume_[b] += field.grid.cell_volume();
      count_[b] += static_cast<double>(pattern.cell_counts[c]);
    }
    std::vector<double> vol, cnt;
    for (std::size_t b = 0; b < bins; ++b) {
      if (volume_[b] == 0.0) continue;
      std::vector<double> z(d);
      std::size_t rest = b;
      for (int a = d - 1; a >= 0; --a) {
        z[a] = (static_cast<double>(rest % per_axis) + 0.5) / static_cast<double>(per_axis);
        rest /= per_axis;
      }
      points.push_back(std::move(z));
      vol.push_back(volume_[b]);
      cnt.push_back(count_[b]);
    }
    volume_ = std::move(vol);
    count_ = std::move(cnt);
  } else {
    for (std::size_t c = 0; c < field.cell_count(); ++c) {
      const auto z = field.at(c);
      points.emplace_back(z.begin(), z.end());
      volume_.push_back(field.grid.cell_volume());
      count_.push_back(static_cast<double>(pattern.cell_counts[c]));
    }
  }
  atoms_ = points.size();
  std::vector<BasisTerm> t;
  for (const auto& z : points) {
    term_start_.push_back(terms_.size());
    basis_->evaluate(z, basis_->max_level(), t);
    terms_.insert(terms_.end(), t.begin(), t.end());
  }
  term_start_.push_back(terms_.size());
}

double WaveletTarget::log_likelihood(const WaveletState& state) const {
  if (atoms_ == 0) return 0.0;
  const std::size_t active = basis_->count(state.level);
  double scale[32];
  for (int l = 1; l <= basis_->max_level(); ++l) scale[l] = std::exp2(-l * (state.alpha + 0.5 * basis_->dim()));
  double ll = 0.0;
  for (std::size_t i = 0; i < atoms_; ++i) {
    double w = 0.0;
    for (std::size_t q = term_start_[i]; q < term_start_[i + 1]; ++q) {
      const BasisTerm& t = terms_[q];
      if (t.index < active) w += scale[basis_->level_of(t.index)] * state.coefficients[t.index] * t.value;
    }
    const double rho = state.link(w);
    if (count_[i] > 0.0) {
      if (!(rho > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += count_[i] * std::log(rho);
    }
    ll -= volume_[i] * rho;
  }
  return ll;
}

bool level_move(WaveletState& state, const LevelPrior& prior, const WaveletTarget& target, double& loglik, Rng& rng) {
  const bool birth = rng.bernoulli(0.5);
  const int to = state.level + (birth ? 1 : -1);
  if (to < prior.l_min || to > prior.l_max || to > state.basis->max_level() || to < 1) return false;
  WaveletState proposal = state;
  proposal.level = to;
  if (birth) {
    proposal.coefficients.resize(state.basis->count(to));
    for (std::size_t i = state.coefficients.size(); i < proposal.coefficients.size(); ++i)
      proposal.coefficients[i] = rng.normal();
  } else {
    proposal.coefficients.resize(state.basis->count(to));
  }
  const double ll = target.log_likelihood(proposal);
  const double log_ratio = prior.log_mass(to) - prior.log_mass(state.level) + (ll - loglik);
  if (std::log(rng.uniform_open()) < log_ratio) {
    state = std::move(proposal);
    loglik = ll;
    return true;
  }
  return false;
}

ChainResult pcn_chain(const WaveletState& init, const WaveletTarget& target, const PcnOptions& options,
                      std::uint64_t seed) {
  if (!(options.beta > 0.0 && options.beta <= 1.0)) throw DomainError("pCN step beta must lie in (0, 1]");
  ChainResult r;
  WaveletState state = init;
  double ll = target.log_likelihood(state);
  if (!std::isfinite(ll)) throw Error("initial state has non-finite log-likelihood");
  Rng rng(seed);
  double beta = options.beta;
  std::size_t window_accepts = 0, window_size = 0, kept_accepts = 0, kept = 0;
  WaveletState proposal = state;
  for (std::size_t it = 0; it < options.iters; ++it) {
    proposal.level = state.level;
    proposal.coefficients.resize(state.coefficients.size());
    const double keep = std::sqrt(1.0 - beta * beta);
    for (std::size_t i = 0; i < state.coefficients.size(); ++i)
      proposal.coefficients[i] = keep * state.coefficients[i] + beta * rng.normal();
    const double ll_new = target.log_likelihood(proposal);
    const double log_u = std::log(rng.uniform_open());
    const bool accepted = std::isfinite(ll_new) && log_u < ll_new - ll;
    if (accepted) {
      std::swap(state.coefficients, proposal.coefficients);
      ll = ll_new;
    }
    if (options.level_prior && level_move(state, *options.level_prior, target, ll, rng)) ++r.level_moves_accepted;
    r.records.push_back({it, state.level, ll, accepted});

    if (it < options.burn_in) {
      ++window_size;
      window_accepts += accepted;
      if (options.adapt && window_size == options.adapt_window) {
        const double rate = static_cast<double>(window_accepts) / static_cast<double>(window_size);
        if (rate > 0.4) beta = std::min(1.0, 2.0 * beta);
        if (rate < 0.15) beta *= 0.5;
        window_size = window_accepts = 0;
      }
    } else {
      ++kept;
      kept_accepts += accepted;
      if (options.thin > 0 && (it - options.burn_in) % options.thin == 0) r.samples.push_back(state);
    }
    if (options.snapshot_every > 0 && it % options.snapshot_every == 0) r.snapshots.emplace_back(it, state);
  }
  r.final_state = state;
  r.beta = beta;
  r.acceptance_rate = kept ? static_cast<double>(kept_accepts) / static_cast<double>(kept) : 0.0;
  return r;
}

void save_chain(const ChainResult& result, const std::filesystem::path& dir) {
  std::string lines;
  for (const auto& rec : result.records) {
    Json j{{"iter", rec.iter}, {"L", rec.level}, {"loglik", rec.log_likelihood}, {"accepted", rec.accepted}};
    lines += j.dump() + "\n";
  }
  write_text(dir / "chain.jsonl", lines);
  std::ofstream out(dir / "snapshots.bin", std::ios::binary);
  if (!out) throw Error("cannot write snapshots in " + dir.string());
  for (const auto& [iter, s] : result.snapshots) {
    const std::uint64_t it = iter;
    const std::uint32_t level = static_cast<std::uint32_t>(s.level);
    const std::uint64_t count = s.coefficients.size();
    out.write(reinterpret_cast<const char*>(&it), 8);
    out.write(reinterpret_cast<const char*>(&level), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(s.coefficients.data()), static_cast<std::streamsize>(8 * count));
  }
}

}  // namespace coxbayes
