#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fde/grid.hpp"

namespace fde {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear_fit: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("linear_fit: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

/// Given errors e_k measured at successive dyadic refinements, fit
/// log2 e_k = a - rate * k and return rate. Zero errors are clamped to 1e-300.
inline double refinement_rate(std::span<const double> errors) {
  std::vector<double> k(errors.size()), le(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    k[i] = static_cast<double>(i);
    le[i] = std::log2(std::max(errors[i], 1e-300));
  }
  return -linear_fit(k, le).slope;
}

/// Average reduction factor per refinement implied by the fitted rate.
inline double refinement_factor(std::span<const double> errors) {
  return std::pow(2.0, refinement_rate(errors));
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Linear-interpolated quantile, p in [0, 1].
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ValidationError("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace fde
