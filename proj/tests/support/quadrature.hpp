#pragma once

#include <cmath>

namespace oracle {

// Composite Simpson rule with n (even) panels.
template <typename F>
double simpson(const F& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// sigma^2(t) for Exponential(rate) lifetimes under Uniform(0, c) censoring:
// int_0^t rate e^{rate z} / (1 - z / c) dz.
inline double exp_uniform_sigma2(double t, double rate = 1.0, double c = 3.0) {
  return simpson([&](double z) { return rate * std::exp(rate * z) / (1.0 - z / c); }, 0.0, t);
}

}  // namespace oracle
