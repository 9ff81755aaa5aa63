#pragma once

#include <cmath>
#include <string>

#include "kernelgamma/error.hpp"
#include "kernelgamma/geometry.hpp"

namespace kernelgamma::dmm {

/// Which inter-class distance feeds the estimate: the global minimum, or the
/// RMS over all class pairs. The two coincide for 2 classes.
enum class Variant { kMin, kAvg };

inline const char* variant_name(Variant v) {
  return v == Variant::kMin ? "min" : "avg";
}

/// Closed-form kernel parameter derived from class geometry.
struct Estimate {
  double gamma = 0.0;
  double sigma = 0.0;   // gamma = 1 / (2 sigma^2)
  double d_max = 0.0;   // largest class diameter used
  double d_used = 0.0;  // inter-class distance used (min or RMS)
  Variant variant = Variant::kAvg;
};

/// gamma = 1 / (D_max * d), balancing the push to shrink class images
/// against the push to keep class images apart. d is d_min_interclass for
/// the min variant and d_av for the avg variant.
inline Estimate estimate(const geometry::ClassGeometry& g,
                         Variant v = Variant::kAvg) {
  Estimate e;
  e.variant = v;
  e.d_max = g.d_max;
  e.d_used = (v == Variant::kMin) ? g.d_min_interclass : g.d_av;
  if (!(e.d_max > 0.0))
    throw degenerate_geometry_error(
        "every class has zero diameter; no finite kernel parameter exists");
  if (!(e.d_used > 0.0)) {
    std::string what = "inter-class distance is zero (classes touch)";
    if (v == Variant::kMin)
      what += "; the avg variant may still be usable";
    throw degenerate_geometry_error(what);
  }
  e.gamma = 1.0 / (e.d_max * e.d_used);
  e.sigma = std::sqrt(0.5 * e.d_max * e.d_used);
  return e;
}

/// Weighted compactness/separation objective
///   G(gamma) = lambda * gamma * D_max^2 + (1 - lambda) / (gamma * d_min^2),
/// strictly convex in gamma on (0, inf).
inline double weighted_objective(double gamma, double lambda,
                                 const geometry::ClassGeometry& g) {
  if (!(gamma > 0.0)) throw data_error("gamma must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw data_error("lambda must lie in (0, 1)");
  if (!(g.d_min_interclass > 0.0))
    throw degenerate_geometry_error("inter-class distance is zero");
  return lambda * gamma * g.d_max * g.d_max +
         (1.0 - lambda) / (gamma * g.d_min_interclass * g.d_min_interclass);
}

/// Minimizer of the weighted objective:
///   gamma(lambda) = sqrt((1 - lambda) / lambda) / (D_max * d_min).
/// At lambda = 1/2 this is the estimate() value with the min variant.
inline double stationary_gamma(double lambda,
                               const geometry::ClassGeometry& g) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw data_error("lambda must lie in (0, 1)");
  if (!(g.d_max > 0.0) || !(g.d_min_interclass > 0.0))
    throw degenerate_geometry_error(
        "stationary gamma needs positive D_max and d_min");
  return std::sqrt((1.0 - lambda) / lambda) / (g.d_max * g.d_min_interclass);
}

}  // namespace kernelgamma::dmm
