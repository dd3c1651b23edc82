#include "coxbayes/intensity.hpp"

#include <cmath>
#include <numbers>

#include "coxbayes/error.hpp"

namespace coxbayes {

double AnalyticIntensity::operator()(std::span<const double> z) const {
  double s = 0.0;
  for (double v : z) s += v;
  s /= static_cast<double>(z.size());
  switch (kind) {
    case Kind::Constant:
      return c;
    case Kind::Linear:
      return c + b * s;
    case Kind::Step:
      return s < z0 ? c : b;
    case Kind::Kink:
      return c + b * std::abs(s - z0);
    case Kind::Sine:
      return c + b * std::sin(2.0 * std::numbers::pi * s);
  }
  return 0.0;
}

std::string AnalyticIntensity::name() const {
  switch (kind) {
    case Kind::Constant:
      return "constant";
    case Kind::Linear:
      return "linear";
    case Kind::Step:
      return "step";
    case Kind::Kink:
      return "kink";
    case Kind::Sine:
      return "sine";
  }
  return "?";
}

AnalyticIntensity::Kind analytic_kind_from_string(const std::string& name) {
  using K = AnalyticIntensity::Kind;
  if (name == "constant") return K::Constant;
  if (name == "linear") return K::Linear;
  if (name == "step") return K::Step;
  if (name == "kink") return K::Kink;
  if (name == "sine") return K::Sine;
  throw DomainError("unknown analytic intensity '" + name + "'");
}

double eval_tree(const PartitionTree& tree, const TreeIntensity& t, std::span<const double> z) {
  const NodeIndex leaf = tree.locate_at(z, tree.max_level());
  double r = t.rho_star;
  for (int l = 1; l <= tree.max_level(); ++l) r *= t.y[NodeIndex{l, leaf.bits >> (tree.max_level() - l)}.id()];
  return r;
}

double IntensityFn::operator()(std::span<const double> z) const {
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, AnalyticIntensity>)
          return f(z);
        else if constexpr (std::is_same_v<F, TreePiecewise>)
          return eval_tree(*f.tree, f.factors, z);
        else
          return f.state.rho(z);
      },
      repr_);
}

}  // namespace coxbayes
