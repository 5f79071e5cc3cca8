#pragma once

#include <cmath>

#include "swald/error.hpp"

namespace swald {

// Population inputs only: slopes are asymptotic identities, not estimators.
struct BahadurPoint {
  double z_max;
  double z_min;
  double rho;

  BahadurPoint(double z_max_in, double z_min_in, double rho_in)
      : z_max(z_max_in), z_min(z_min_in), rho(rho_in) {
    if (z_max < z_min) throw ConfigError("BahadurPoint: z_max < z_min");
    if (!(std::fabs(rho) < 1.0))
      throw DegenerateCorrelationError("BahadurPoint: |rho| must be < 1");
  }
};

inline double slope_sw(const BahadurPoint& pt) {
  if (pt.z_max < 0.0) return 0.0;
  if (pt.z_min <= pt.rho * pt.z_max) return pt.z_max * pt.z_max;
  const double d = pt.z_max - pt.z_min;
  // (1-rho^2) as (1-rho)(1+rho): keeps the z_min = z_max endpoint exact
  return (d * d + 2.0 * (1.0 - pt.rho) * pt.z_min * pt.z_max) /
         ((1.0 - pt.rho) * (1.0 + pt.rho));
}

inline double slope_minp(const BahadurPoint& pt) {
  return pt.z_max >= 0.0 ? pt.z_max * pt.z_max : 0.0;
}

// Ratio is 1 on {z_min <= rho z_max} and rises to 2/(1+rho) at z_min = z_max.
inline double efficiency_ratio(const BahadurPoint& pt) {
  if (pt.z_max <= 0.0)
    throw NullAlternativeError("efficiency_ratio: z_max must be positive");
  return slope_sw(pt) / slope_minp(pt);
}

}  // namespace swald
