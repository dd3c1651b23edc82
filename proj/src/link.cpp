#include "coxbayes/link.hpp"

#include <cfloat>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "coxbayes/error.hpp"

namespace coxbayes {

namespace {

constexpr double kTableLow = -50.0;
constexpr double kTableHigh = 50.0;
constexpr double kStep = 1e-3;
// h is symmetric with unit mass, so h * (1 + u) = 1 + u once the window sits in u >= 0.
constexpr double kRampExact = 1.0;

struct RampTable {
  double a = 2.0;
  double c = 2.0;
  std::vector<double> eta;
  std::vector<double> deta;

  double g(double u) const { return u >= 0.0 ? 1.0 + u : std::pow(c, a - 1.0) * std::pow(c - u, 1.0 - a); }
  double dg(double u) const { return u >= 0.0 ? 1.0 : (a - 1.0) * std::pow(c, a - 1.0) * std::pow(c - u, -a); }

  explicit RampTable(double a_in) : a(a_in), c(std::pow(2.0 / (a_in - 1.0), 1.0 / (a_in - 1.0))) {
    const int hn = static_cast<int>(std::lround(1.0 / kStep));
    std::vector<double> h(2 * hn + 1);
    double total = 0.0;
    for (int j = -hn; j <= hn; ++j) {
      const double s = j * kStep;
      const double v = std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
      h[j + hn] = v;
      total += v;
    }
    for (double& v : h) v /= total;

    const int lo = static_cast<int>(std::lround(kTableLow / kStep)) - hn;
    const int hi = static_cast<int>(std::lround(kRampExact / kStep)) + hn;
    std::vector<double> gs(hi - lo + 1), dgs(hi - lo + 1);
    for (int i = lo; i <= hi; ++i) {
      gs[i - lo] = g(i * kStep);
      dgs[i - lo] = dg(i * kStep);
    }
    const int n = static_cast<int>(std::lround((kRampExact - kTableLow) / kStep)) + 1;
    eta.resize(n);
    deta.resize(n);
    const int first = static_cast<int>(std::lround(kTableLow / kStep));
    for (int i = 0; i < n; ++i) {
      const int ui = first + i;
      double e = 0.0, d = 0.0;
      for (int j = -hn; j <= hn; ++j) {
        e += h[j + hn] * gs[ui - j - lo];
        d += h[j + hn] * dgs[ui - j - lo];
      }
      eta[i] = e;
      deta[i] = d;
    }
  }

  double lookup(const std::vector<double>& t, double u) const {
    const double x = (u - kTableLow) / kStep;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= t.size()) return t.back();
    const double f = x - static_cast<double>(i);
    return t[i] + f * (t[i + 1] - t[i]);
  }

  double value(double u) const {
    if (u >= kRampExact) return 1.0 + u;
    if (u < kTableLow)
      return std::max(DBL_MIN, eta.front() * std::pow((c - kTableLow) / (c - u), a - 1.0));
    return lookup(eta, u);
  }
  double derivative(double u) const {
    if (u >= kRampExact) return 1.0;
    if (u < kTableLow) return std::max(DBL_MIN, deta.front() * std::pow((c - kTableLow) / (c - u), a));
    return lookup(deta, u);
  }
};

const RampTable& ramp_table(double a) {
  static std::mutex mutex;
  static std::map<double, std::unique_ptr<RampTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[a];
  if (!slot) slot = std::make_unique<RampTable>(a);
  return *slot;
}

}  // namespace

LinkFn LinkFn::sigmoid(double m1) {
  if (!(m1 > 0.0)) throw DomainError("sigmoid link needs M1 > 0");
  return {Kind::Sigmoid, m1, 2.0};
}

LinkFn LinkFn::mollified_ramp(double a) {
  if (!(a > 1.0)) throw DomainError("mollified ramp link needs a > 1");
  return {Kind::MollifiedRamp, 1.0, a};
}

double LinkFn::operator()(double u) const {
  switch (kind) {
    case Kind::Exp:
      return std::exp(u);
    case Kind::Sigmoid:
      return u >= 0.0 ? m1 / (1.0 + std::exp(-u)) : m1 * std::exp(u) / (1.0 + std::exp(u));
    case Kind::MollifiedRamp:
      return ramp_table(a).value(u);
  }
  return 0.0;
}

double LinkFn::derivative(double u) const {
  switch (kind) {
    case Kind::Exp:
      return std::exp(u);
    case Kind::Sigmoid: {
      const double e = std::exp(-std::abs(u));
      return m1 * e / ((1.0 + e) * (1.0 + e));
    }
    case Kind::MollifiedRamp:
      return ramp_table(a).derivative(u);
  }
  return 0.0;
}

double LinkFn::tail_threshold() const {
  if (kind != Kind::MollifiedRamp) return -INFINITY;
  const double c = std::pow(2.0 / (a - 1.0), 1.0 / (a - 1.0));
  return -(c + 1.0) / (std::pow(2.0, 1.0 / a) - 1.0);
}

std::string LinkFn::name() const {
  switch (kind) {
    case Kind::Exp:
      return "exp";
    case Kind::Sigmoid:
      return "sigmoid";
    case Kind::MollifiedRamp:
      return "mollified_ramp";
  }
  return "?";
}

LinkFn link_from_string(const std::string& name, double m1, double a) {
  if (name == "exp") return LinkFn::exp();
  if (name == "sigmoid") return LinkFn::sigmoid(m1);
  if (name == "mollified_ramp") return LinkFn::mollified_ramp(a);
  throw DomainError("unknown link '" + name + "'");
}

}  // namespace coxbayes
