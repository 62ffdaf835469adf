#pragma once

// Left-point Riemann-sum Young integration with dyadic-level monitoring and
// numerical checks of the integration-by-parts, chain-rule and Fubini
// identities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fde/grid.hpp"
#include "fde/holder.hpp"
#include "fde/stats.hpp"

namespace fde {

struct LevelValue {
  std::size_t pieces = 0;
  Eigen::VectorXd value;
};

struct YoungIntegralResult {
  /// t -> J_{t_start, t} at the finest level; row 0 is zero.
  GridPath integral_path;
  /// J over the whole interval computed on coarser dyadic sub-grids.
  std::vector<LevelValue> levels;
  /// Fitted decay rate of |level_{k+1} - level_k| per refinement.
  double rate_estimate = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

// sum_{i in [a, b)} F_i (g_{i+1} - g_i) with F_i the n x d matrix stored row-major in f.row(i).
inline void accumulate_step(const GridPath& f, const GridPath& g, std::size_t a, std::size_t b,
                            Eigen::Ref<Eigen::VectorXd> acc) {
  const auto n = acc.size();
  const auto d = static_cast<Eigen::Index>(g.dim());
  for (Eigen::Index r = 0; r < n; ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < d; ++c)
      s += f.values()(static_cast<Eigen::Index>(a), r * d + c) *
           (g.values()(static_cast<Eigen::Index>(b), c) - g.values()(static_cast<Eigen::Index>(a), c));
    acc(r) += s;
  }
}

}  // namespace detail

struct RateWindow {
  std::size_t min_level = 6;
  std::size_t max_level = 12;
};

/// Young integral of f (values in R^{n x d}, flattened row-major) against g
/// (values in R^d). The output dimension n is f.dim() / g.dim().
inline YoungIntegralResult young_integrate(const GridPath& f, const GridPath& g, double kappa = 1.0,
                                           double gamma = 1.0, RateWindow window = {}) {
  require_same_grid(f, g, "young_integrate");
  if (f.dim() % g.dim() != 0)
    throw ValidationError("young_integrate: integrand columns do not match the driver dimension");
  const std::size_t n_out = f.dim() / g.dim();
  const std::size_t steps = f.grid().n_steps();

  YoungIntegralResult res;
  if (!(kappa + gamma > 1.0))
    res.warnings.push_back("kappa + gamma <= 1: the Riemann sums need not converge");

  GridPath out(f.grid(), n_out);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
  for (std::size_t i = 0; i < steps; ++i) {
    detail::accumulate_step(f, g, i, i + 1, acc);
    out.row(i + 1) = acc.transpose();
  }
  res.integral_path = std::move(out);

  std::size_t max_k = 0;
  while (max_k < 62 && f.grid().is_dyadic_to(max_k + 1)) ++max_k;
  for (std::size_t k = 0; k <= max_k; ++k) {
    const std::size_t pieces = std::size_t{1} << k;
    const std::size_t stride = steps / pieces;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
    for (std::size_t p = 0; p < pieces; ++p) detail::accumulate_step(f, g, p * stride, (p + 1) * stride, v);
    res.levels.push_back({pieces, std::move(v)});
  }

  std::vector<double> diffs;
  for (std::size_t k = window.min_level; k + 1 < res.levels.size() && k < window.max_level; ++k)
    diffs.push_back((res.levels[k + 1].value - res.levels[k].value).norm());
  if (diffs.size() < 2) {
    diffs.clear();
    for (std::size_t k = 1; k + 1 < res.levels.size(); ++k)
      diffs.push_back((res.levels[k + 1].value - res.levels[k].value).norm());
  }
  if (diffs.size() >= 2) res.rate_estimate = refinement_rate(diffs);
  return res;
}

/// ||f||_inf ||g||_gamma |t-s|^gamma + c ||f||_kappa ||g||_gamma |t-s|^{gamma+kappa},
/// c = (2^{gamma+kappa} - 2)^{-1}.
inline double apriori_bound(double f_sup, double f_kappa, double g_gamma, double kappa, double gamma,
                            double length) {
  if (!(kappa + gamma > 1.0)) throw ValidationError("apriori_bound: kappa + gamma must exceed 1");
  return f_sup * g_gamma * std::pow(length, gamma) +
         sewing_constant(gamma + kappa) * f_kappa * g_gamma * std::pow(length, gamma + kappa);
}

/// Bound on |J_{st}(f dg)| from grid seminorms over nodes [s, t], each
/// seminorm multiplied by `inflation`.
inline double apriori_bound(const GridPath& f, const GridPath& g, double kappa, double gamma, std::size_t s,
                            std::size_t t, double inflation = 1.0) {
  require_same_grid(f, g, "apriori_bound");
  const double fs = sup_norm(f, s, t);
  const double fk = inflation * holder_seminorm(f, kappa, s, t).seminorm;
  const double gg = inflation * holder_seminorm(g, gamma, s, t).seminorm;
  return apriori_bound(fs, fk, gg, kappa, gamma, f.grid().node(t) - f.grid().node(s));
}

/// max_t | <f_t, g_t> - <f_0, g_0> - J_{0t}(f dg) - J_{0t}(g df) |.
inline double check_ibp(const GridPath& f, const GridPath& g) {
  require_same_grid(f, g, "check_ibp");
  if (f.dim() != g.dim()) throw ValidationError("check_ibp: dimension mismatch");
  const auto jf = young_integrate(f, g).integral_path;
  const auto jg = young_integrate(g, f).integral_path;
  const double fg0 = f.row(0).dot(g.row(0));
  double res = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    res = std::max(res, std::abs(f.row(i).dot(g.row(i)) - fg0 - jf(i) - jg(i)));
  return res;
}

/// Scalar C^2 map with its derivative.
struct ScalarMap {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

/// With x_t = x0 + J_{0t}(g dh), returns max_t |fun(x_t) - fun(x_0) - J_{0t}(fun'(x) g dh)|.
/// g has values in R^{1 x d}, h in R^d.
inline double check_chain_rule(const ScalarMap& fun, const GridPath& g, const GridPath& h, double x0 = 0.0) {
  require_same_grid(g, h, "check_chain_rule");
  if (g.dim() != h.dim()) throw ValidationError("check_chain_rule: g must have one row of h.dim() columns");
  GridPath x = young_integrate(g, h).integral_path;
  x.values().array() += x0;

  GridPath integrand(g.grid(), g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) integrand.row(i) = fun.deriv(x(i)) * g.row(i);
  const auto j = young_integrate(integrand, h).integral_path;

  double res = 0.0;
  const double f0 = fun.value(x(0));
  for (std::size_t i = 0; i < x.size(); ++i) res = std::max(res, std::abs(fun.value(x(i)) - f0 - j(i)));
  return res;
}

struct FubiniResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Compares int_0^T int_0^r h(r,u) dg_u df_r with int_0^T int_u^T h(r,u) df_r dg_u
/// for scalar f, g. The kernel is assumed Hölder in each argument.
inline FubiniResult check_fubini(const std::function<double(double, double)>& kernel, const GridPath& f,
                                 const GridPath& g) {
  require_same_grid(f, g, "check_fubini");
  if (f.dim() != 1 || g.dim() != 1) throw ValidationError("check_fubini: scalar paths expected");
  const auto& grid = f.grid();
  const std::size_t n = grid.n_steps();

  // One inner integral per outer node, each a left-point sum.
  FubiniResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.node(i);
    double inner = 0.0;
    for (std::size_t k = 0; k < i; ++k) inner += kernel(r, grid.node(k)) * (g(k + 1) - g(k));
    out.lhs += inner * (f(i + 1) - f(i));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double u = grid.node(k);
    double inner = 0.0;
    for (std::size_t i = k; i < n; ++i) inner += kernel(grid.node(i), u) * (f(i + 1) - f(i));
    out.rhs += inner * (g(k + 1) - g(k));
  }
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

/// Deterministic Weierstrass-type path sum_k base^{-k gamma} cos(base^k pi t + phase),
/// Hölder of order gamma.
inline GridPath weierstrass_path(const UniformGrid& grid, double gamma, double base = 3.0, std::size_t terms = 16,
                                 double phase = 0.0) {
  return GridPath::from_function(grid, [&](double t) {
    double s = 0.0;
    double amp = 1.0, freq = 1.0;
    const double damp = std::pow(base, -gamma);
    for (std::size_t k = 0; k < terms; ++k) {
      s += amp * std::cos(freq * 3.14159265358979323846 * t + phase);
      amp *= damp;
      freq *= base;
    }
    return s;
  });
}

}  // namespace fde
