#include "coxbayes/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "coxbayes/error.hpp"

namespace coxbayes {

Quadrature make_quadrature(const StationaryMeasure& nu, int dim_d, std::size_t points_per_axis) {
  Quadrature q;
  q.dim_d = dim_d;
  if (const auto* u = std::get_if<UniformBoxMeasure>(&nu)) {
    std::size_t m = std::max<std::size_t>(1, points_per_axis);
    const auto cap = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(kMaxQuadTotal), 1.0 / dim_d) + 1e-9));
    m = std::min(m, std::max<std::size_t>(1, cap));
    std::size_t total = 1;
    for (int a = 0; a < dim_d; ++a) total *= m;
    const double h = (u->high - u->low) / static_cast<double>(m);
    q.points.resize(total * dim_d);
    q.weights.assign(total, 1.0 / static_cast<double>(total));
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t rest = i;
      for (int a = dim_d - 1; a >= 0; --a) {
        q.points[i * dim_d + a] = u->low + (static_cast<double>(rest % m) + 0.5) * h;
        rest /= m;
      }
    }
    return q;
  }
  if (const auto* dm = std::get_if<DiscreteMeasure>(&nu)) {
    const std::size_t k = dm->values.size();
    std::size_t total = 1;
    for (int a = 0; a < dim_d; ++a) total *= k;
    q.points.resize(total * dim_d);
    q.weights.assign(total, 1.0);
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t rest = i;
      for (int a = dim_d - 1; a >= 0; --a) {
        q.points[i * dim_d + a] = dm->values[rest % k];
        q.weights[i] *= dm->probs[rest % k];
        rest /= k;
      }
    }
    return q;
  }
  throw DomainError("no quadrature for the standard normal stationary measure; transform the field first");
}

namespace {

std::vector<double> evaluate(const IntensityFn& f, const Quadrature& q) {
  std::vector<double> v(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) v[i] = f(q.point(i));
  return v;
}

}  // namespace

double empirical_l1(std::span<const double> raster, std::span<const double> raster0, const Grid& grid) {
  double s = 0.0;
  for (std::size_t c = 0; c < raster.size(); ++c) s += std::abs(raster[c] - raster0[c]);
  return s * grid.cell_volume() / grid.window().volume;
}

double empirical_l1(const IntensityFn& rho, const IntensityFn& rho0, const CovariateField& field) {
  double s = 0.0;
  for (std::size_t c = 0; c < field.cell_count(); ++c) s += std::abs(rho(field.at(c)) - rho0(field.at(c)));
  return s * field.grid.cell_volume() / field.n();
}

double l1_nu(std::span<const double> values, std::span<const double> values0, const Quadrature& quad) {
  double s = 0.0;
  for (std::size_t i = 0; i < quad.size(); ++i) s += quad.weights[i] * std::abs(values[i] - values0[i]);
  return s;
}

double l1_nu(const IntensityFn& rho, const IntensityFn& rho0, const StationaryMeasure& nu, int dim_d,
             std::size_t points_per_axis) {
  const Quadrature q = make_quadrature(nu, dim_d, points_per_axis);
  return l1_nu(evaluate(rho, q), evaluate(rho0, q), q);
}

KlStats kl_stats(std::span<const double> values, std::span<const double> values0, const Quadrature& quad) {
  KlStats k;
  double m = 0.0, m0 = 0.0;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    m += quad.weights[i] * values[i];
    m0 += quad.weights[i] * values0[i];
  }
  k.mass_gap = std::abs(m - m0);
  if (!(m0 > 0.0)) return k;
  if (!(m > 0.0)) {
    k.infinite = true;
    k.kl_nu = k.v2_nu = std::numeric_limits<double>::infinity();
    return k;
  }
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const double p0 = values0[i] / m0;
    if (p0 <= 0.0) continue;
    const double p = values[i] / m;
    if (!(p > 0.0)) {
      k.infinite = true;
      k.kl_nu = k.v2_nu = std::numeric_limits<double>::infinity();
      return k;
    }
    const double lr = std::log(p0 / p);
    k.kl_nu += quad.weights[i] * p0 * lr;
    k.v2_nu += quad.weights[i] * p0 * lr * lr;
  }
  k.kl_nu = std::max(0.0, k.kl_nu);
  return k;
}

KlStats kl_stats(const IntensityFn& rho, const IntensityFn& rho0, const StationaryMeasure& nu, int dim_d,
                 std::size_t points_per_axis) {
  const Quadrature q = make_quadrature(nu, dim_d, points_per_axis);
  return kl_stats(evaluate(rho, q), evaluate(rho0, q), q);
}

std::vector<double> ergodic_gap(const IntensityFn& rho, const IntensityFn& rho0, std::span<const CovariateField> fields,
                                std::size_t points_per_axis) {
  std::vector<double> gaps;
  for (const auto& f : fields) {
    const double limit = l1_nu(rho, rho0, f.nu, f.dim_d, points_per_axis);
    gaps.push_back(std::abs(empirical_l1(rho, rho0, f) - limit));
  }
  return gaps;
}

void append_loss_csv(const std::filesystem::path& path, double n, std::uint64_t seed, const LossReport& report) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out.precision(17);
  if (fresh) out << "n,seed,loss,value\n";
  auto row = [&](const char* name, double v) { out << n << ',' << seed << ',' << name << ',' << v << '\n'; };
  row("empirical_l1", report.empirical_l1);
  row("l1_nu", report.l1_nu);
  if (report.pointwise_abs) row("pointwise_abs", *report.pointwise_abs);
  row("kl_nu", report.kl_nu);
  row("v2_nu", report.v2_nu);
  row("mass_gap", report.mass_gap);
}

}  // namespace coxbayes
