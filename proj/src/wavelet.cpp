#include "coxbayes/wavelet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "coxbayes/error.hpp"

namespace coxbayes {

namespace {

constexpr int kCascadeBits = 14;

// Daubechies-4 scaling function and wavelet on [0, 3], tabulated at 2^-14 by the cascade recursion.
struct D4Table {
  std::vector<double> phi;
  std::vector<double> psi;

  D4Table() {
    const double s3 = std::sqrt(3.0);
    const double r2 = std::sqrt(2.0);
    const double h[4] = {(1 + s3) / (4 * r2), (3 + s3) / (4 * r2), (3 - s3) / (4 * r2), (1 - s3) / (4 * r2)};
    const std::size_t unit = std::size_t{1} << kCascadeBits;
    const std::size_t size = 3 * unit + 1;
    phi.assign(size, 0.0);
    phi[unit] = (1 + s3) / 2;
    phi[2 * unit] = (1 - s3) / 2;
    auto phi_at = [&](long long idx) -> double {
      return idx < 0 || idx >= static_cast<long long>(size) ? 0.0 : phi[static_cast<std::size_t>(idx)];
    };
    for (int r = 1; r <= kCascadeBits; ++r) {
      const std::size_t stride = unit >> r;
      for (std::size_t idx = stride; idx < size; idx += 2 * stride) {
        double v = 0.0;
        for (int m = 0; m < 4; ++m) v += r2 * h[m] * phi_at(2 * static_cast<long long>(idx) - m * static_cast<long long>(unit));
        phi[idx] = v;
      }
    }
    psi.assign(size, 0.0);
    for (std::size_t idx = 0; idx < size; ++idx) {
      double v = 0.0;
      for (int m = 0; m < 4; ++m) {
        const double g = (m % 2 == 0 ? 1.0 : -1.0) * h[3 - m];
        v += r2 * g * phi_at(2 * static_cast<long long>(idx) - m * static_cast<long long>(unit));
      }
      psi[idx] = v;
    }
  }

  static double interp(const std::vector<double>& t, double x) {
    if (x <= 0.0 || x >= 3.0) return 0.0;
    const double p = std::ldexp(x, kCascadeBits);
    const auto i = static_cast<std::size_t>(p);
    const double f = p - static_cast<double>(i);
    return i + 1 < t.size() ? t[i] + f * (t[i + 1] - t[i]) : t[i];
  }
};

const D4Table& d4() {
  static const D4Table table;
  return table;
}

int level_1d(std::uint32_t i) { return i < 2 ? 1 : std::bit_width(i); }

}  // namespace

std::string to_string(WaveletFamily family) { return family == WaveletFamily::Haar ? "haar" : "daubechies4"; }

WaveletFamily wavelet_family_from_string(const std::string& name) {
  if (name == "haar") return WaveletFamily::Haar;
  if (name == "daubechies4" || name == "d4") return WaveletFamily::Daubechies4;
  throw DomainError("unknown wavelet family '" + name + "'");
}

int max_wavelet_level(int dim_d) { return 18 / dim_d; }

WaveletBasis::WaveletBasis(WaveletFamily family, int dim_d, int max_level)
    : family_(family), dim_(dim_d), max_level_(max_level) {
  if (dim_d < 1) throw DomainError("wavelet basis needs d >= 1");
  if (max_level < 1 || max_level > max_wavelet_level(dim_d))
    throw DomainError("wavelet level " + std::to_string(max_level) + " outside 1.." +
                      std::to_string(max_wavelet_level(dim_d)) + " for d=" + std::to_string(dim_d));
  const std::size_t per_axis = std::size_t{1} << max_level;
  const std::size_t total = count(max_level);
  std::vector<int> lex_level(total);
  for (std::size_t lex = 0; lex < total; ++lex) {
    int lv = 1;
    std::size_t rest = lex;
    for (int a = 0; a < dim_; ++a) {
      lv = std::max(lv, level_1d(static_cast<std::uint32_t>(rest % per_axis)));
      rest /= per_axis;
    }
    lex_level[lex] = lv;
  }
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t x, std::uint32_t y) { return lex_level[x] < lex_level[y]; });
  position_.resize(total);
  tuples_.resize(total * dim_);
  levels_.resize(total);
  for (std::size_t pos = 0; pos < total; ++pos) {
    const std::uint32_t lex = order[pos];
    position_[lex] = static_cast<std::uint32_t>(pos);
    levels_[pos] = lex_level[lex];
    std::size_t rest = lex;
    for (int a = dim_ - 1; a >= 0; --a) {
      tuples_[pos * dim_ + a] = static_cast<std::uint32_t>(rest % per_axis);
      rest /= per_axis;
    }
  }
}

std::size_t WaveletBasis::count(int level) const { return std::size_t{1} << (level * dim_); }

double WaveletBasis::value_1d(std::uint32_t index, double x) const {
  if (index == 0) return 1.0;
  const int j = std::bit_width(index) - 1;
  const double n = std::ldexp(1.0, j);
  const double k = static_cast<double>(index) - n;
  const double amp = std::sqrt(n);
  if (family_ == WaveletFamily::Haar) {
    double t = n * x - k;
    if (x >= 1.0 && k == n - 1) t = 1.0 - 1e-300;
    if (t < 0.0 || t >= 1.0) return 0.0;
    return t < 0.5 ? amp : -amp;
  }
  const double t = n * x - k;
  double v = 0.0;
  const double m_hi = std::floor((3.0 - t) / n);
  for (double m = std::ceil(-t / n); m <= m_hi; m += 1.0) v += D4Table::interp(d4().psi, t + m * n);
  return amp * v;
}

void WaveletBasis::axis_terms(double x, int level, std::vector<BasisTerm>& out) const {
  out.clear();
  out.push_back({0u, 1.0});
  for (int j = 0; j < level; ++j) {
    const std::uint32_t n = 1u << j;
    const double amp = std::sqrt(static_cast<double>(n));
    const double t = std::ldexp(x, j);
    if (family_ == WaveletFamily::Haar) {
      const std::uint32_t k = std::min<std::uint32_t>(static_cast<std::uint32_t>(t), n - 1);
      const double f = t - k;
      out.push_back({n + k, f < 0.5 ? amp : -amp});
      continue;
    }
    const std::size_t first = out.size();
    const long long base = static_cast<long long>(std::floor(t));
    for (long long u = base - 2; u <= base; ++u) {
      const double v = D4Table::interp(d4().psi, t - static_cast<double>(u));
      if (v == 0.0) continue;
      const auto k = static_cast<std::uint32_t>(((u % n) + n) % n);
      bool merged = false;
      for (std::size_t q = first; q < out.size(); ++q) {
        if (out[q].index == n + k) {
          out[q].value += amp * v;
          merged = true;
        }
      }
      if (!merged) out.push_back({n + k, amp * v});
    }
  }
}

void WaveletBasis::evaluate(std::span<const double> z, int level, std::vector<BasisTerm>& out) const {
  if (level > max_level_) throw DomainError("evaluation level above basis depth");
  thread_local std::vector<std::vector<BasisTerm>> axes;
  axes.resize(dim_);
  for (int a = 0; a < dim_; ++a) axis_terms(z[a], level, axes[a]);
  out.clear();
  const std::uint32_t per_axis = 1u << max_level_;
  std::vector<std::size_t> at(dim_, 0);
  while (true) {
    std::uint32_t lex = 0;
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
      const auto& t = axes[a][at[a]];
      lex = lex * per_axis + t.index;
      v *= t.value;
    }
    out.push_back({position_[lex], v});
    int a = dim_ - 1;
    while (a >= 0 && ++at[a] == axes[a].size()) at[a--] = 0;
    if (a < 0) break;
  }
}

double WaveletBasis::value(std::size_t index, std::span<const double> z) const {
  double v = 1.0;
  const auto t = axis_indices(index);
  for (int a = 0; a < dim_; ++a) v *= value_1d(t[a], z[a]);
  return v;
}

double WaveletState::scale(std::size_t index) const {
  const int l = basis->level_of(index);
  return std::exp2(-l * (alpha + 0.5 * basis->dim()));
}

double WaveletState::field(std::span<const double> z) const {
  thread_local std::vector<BasisTerm> terms;
  basis->evaluate(z, level, terms);
  double w = 0.0;
  for (const auto& t : terms) w += scale(t.index) * coefficients[t.index] * t.value;
  return w;
}

double prior_variance(const WaveletBasis& basis, double alpha, int level, std::span<const double> z) {
  std::vector<BasisTerm> terms;
  basis.evaluate(z, level, terms);
  double v = 0.0;
  for (const auto& t : terms) {
    const double s = std::exp2(-basis.level_of(t.index) * (alpha + 0.5 * basis.dim()));
    v += s * s * t.value * t.value;
  }
  return v;
}

}  // namespace coxbayes
