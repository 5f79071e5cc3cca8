#pragma once

#include <cmath>
#include <limits>

#include "swald/error.hpp"

namespace swald {

inline double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_sf(double x) {
  return 0.5 * std::erfc(x * 0.7071067811865475244);
}

// Wichura's AS 241 (PPND16), accurate to ~1e-16 over (0,1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ConfigError("normal_quantile: p must lie strictly in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -v : v;
}

// Survival functions of chi-squared with 1 and 2 degrees of freedom;
// the null mixture of the two-hypothesis statistic needs nothing else.
inline double chi2_sf(double x, int df) {
  if (x <= 0.0) return 1.0;
  switch (df) {
    case 1: return std::erfc(std::sqrt(0.5 * x));
    case 2: return std::exp(-0.5 * x);
    default: throw ConfigError("chi2_sf: only df 1 and 2 supported");
  }
}

// P(X1 <= x1, X2 <= x2) for standard bivariate normal with correlation rho,
// by Simpson quadrature of phi(t)*Phi((x2-rho t)/sqrt(1-rho^2)) over t <= x1.
inline double bvn_cdf(double x1, double x2, double rho) {
  if (rho >= 1.0 - 1e-12) return normal_cdf(std::fmin(x1, x2));
  if (rho <= -1.0 + 1e-12) return std::fmax(0.0, normal_cdf(x1) + normal_cdf(x2) - 1.0);
  if (x1 >= 9.0) return normal_cdf(x2);
  if (x2 >= 9.0) return normal_cdf(x1);
  const double lo = -9.0;
  const double hi = x1;
  if (hi <= lo) return 0.0;
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const int n = 2000;  // even
  const double h = (hi - lo) / n;
  auto f = [&](double t) { return normal_pdf(t) * normal_cdf((x2 - rho * t) / s); };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return std::fmin(1.0, std::fmax(0.0, acc * h / 3.0));
}

}  // namespace swald
