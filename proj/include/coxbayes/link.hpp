#pragma once

#include <string>

namespace coxbayes {

/// Positive increasing link eta turning a Gaussian series into an intensity.
///  exp:            eta(u) = e^u
///  sigmoid:        eta(u) = M1 / (1 + e^{-u})
///  mollified ramp: eta = h * g with h a smooth bump on [-1,1] and
///                  g(u) = 1 + u for u >= 0, c^{a-1} (c - u)^{1-a} for u < 0,
///                  c = (2/(a-1))^{1/(a-1)}; tabulated on [-50, 50].
struct LinkFn {
  enum class Kind { Exp, Sigmoid, MollifiedRamp };
  Kind kind = Kind::Exp;
  double m1 = 1.0;
  double a = 2.0;

  static LinkFn exp() { return {}; }
  static LinkFn sigmoid(double m1);
  static LinkFn mollified_ramp(double a);

  double operator()(double u) const;
  double derivative(double u) const;
  /// Below this point eta'(v) >= |v|^{-a} (mollified ramp only).
  double tail_threshold() const;
  std::string name() const;
};

LinkFn link_from_string(const std::string& name, double m1, double a);

}  // namespace coxbayes
