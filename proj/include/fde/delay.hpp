#pragma once

// Young delay equations y_t = xi_0 + int_0^t sigma(int_{-h}^0 y_{t+theta} nu(dtheta)) dx_t,
// solved window by window with Picard iteration, plus the method of steps
// for discrete lags.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fde/coefficient.hpp"
#include "fde/grid.hpp"
#include "fde/holder.hpp"

namespace fde {

/// The delay measure nu on [-h, 0]: either finitely many atoms (lag, weight)
/// at y_{t - lag}, or a density sampled on a uniform sub-grid of [-h, 0]
/// (node k at theta = -h + k * h / (points - 1)).
class DelayKernel {
public:
  enum class Variant { discrete, weighted };

  static DelayKernel discrete(std::vector<std::pair<double, double>> lags, double h) {
    if (!(h > 0.0)) throw ValidationError("DelayKernel: horizon h must be positive");
    if (lags.empty()) throw ValidationError("DelayKernel: discrete kernel needs at least one lag");
    for (const auto& [lag, weight] : lags) {
      if (!std::isfinite(weight)) throw ValidationError("DelayKernel: lag weights must be finite");
      if (lag < 0.0 || lag > h * (1.0 + 1e-12))
        throw ValidationError("DelayKernel: lag " + std::to_string(lag) + " outside [0, h]");
    }
    DelayKernel k;
    k.variant_ = Variant::discrete;
    k.h_ = h;
    k.lags_ = std::move(lags);
    return k;
  }

  static DelayKernel weighted(std::vector<double> density, double h) {
    if (!(h > 0.0)) throw ValidationError("DelayKernel: horizon h must be positive");
    if (density.size() < 2) throw ValidationError("DelayKernel: density needs at least two sub-grid values");
    for (double v : density)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("DelayKernel: density must be finite and >= 0");
    DelayKernel k;
    k.variant_ = Variant::weighted;
    k.h_ = h;
    k.density_ = std::move(density);
    return k;
  }

  /// Lebesgue density `level` on [-h, 0] sampled at `points` nodes.
  static DelayKernel uniform(double h, std::size_t points, double level = 1.0) {
    return weighted(std::vector<double>(points, level), h);
  }

  Variant variant() const { return variant_; }
  double h() const { return h_; }
  const std::vector<std::pair<double, double>>& lags() const { return lags_; }
  const std::vector<double>& density() const { return density_; }

  double mass() const {
    if (variant_ == Variant::discrete) {
      double m = 0.0;
      for (const auto& lag : lags_) m += lag.second;
      return m;
    }
    const double dth = h_ / static_cast<double>(density_.size() - 1);
    double m = 0.0;
    for (std::size_t k = 0; k < density_.size(); ++k)
      m += density_[k] * ((k == 0 || k + 1 == density_.size()) ? 0.5 : 1.0);
    return m * dth;
  }

private:
  Variant variant_ = Variant::discrete;
  double h_ = 1.0;
  std::vector<std::pair<double, double>> lags_;
  std::vector<double> density_;
};

/// A kernel compiled against a grid step: (A y)_i = sum_k weight_k y_{i - offset_k}.
struct Stencil {
  std::vector<std::size_t> offsets;
  std::vector<double> weights;
  std::size_t history_steps = 0;  // h / dt
};

inline std::size_t aligned_steps(double span, double dt, const char* what) {
  const double x = span / dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x))
    throw ValidationError(std::string(what) + " is not an integer multiple of dt; align the grid");
  return static_cast<std::size_t>(r);
}

inline Stencil compile_stencil(const DelayKernel& kernel, double dt) {
  Stencil st;
  st.history_steps = aligned_steps(kernel.h(), dt, "delay horizon h");
  if (kernel.variant() == DelayKernel::Variant::discrete) {
    for (const auto& [lag, w] : kernel.lags()) {
      st.offsets.push_back(aligned_steps(lag, dt, ("lag " + std::to_string(lag)).c_str()));
      st.weights.push_back(w);
    }
    return st;
  }
  const auto& dens = kernel.density();
  const std::size_t cells = dens.size() - 1;
  const double dth = kernel.h() / static_cast<double>(cells);
  const std::size_t stride = aligned_steps(dth, dt, "density sub-grid spacing");
  if (stride == 0) throw ValidationError("density sub-grid is finer than the time grid");
  for (std::size_t k = 0; k < dens.size(); ++k) {
    const double w = dens[k] * dth * ((k == 0 || k == cells) ? 0.5 : 1.0);
    if (w == 0.0) continue;
    st.offsets.push_back((cells - k) * stride);
    st.weights.push_back(w);
  }
  return st;
}

/// (A y)_i for rows of `path`; node i must have i >= history_steps.
inline Eigen::VectorXd apply_stencil(const Stencil& st, const Eigen::MatrixXd& path, std::size_t i) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(path.cols());
  for (std::size_t k = 0; k < st.offsets.size(); ++k)
    acc += st.weights[k] * path.row(static_cast<Eigen::Index>(i - st.offsets[k])).transpose();
  return acc;
}

/// sigma(int_{-h}^0 Z(theta) nu(dtheta)) for a history segment on [-h, 0].
inline Eigen::MatrixXd eval_coefficient(const GridPath& segment, const DelayKernel& kernel, const Coefficient& sigma) {
  const Stencil st = compile_stencil(kernel, segment.grid().dt());
  if (segment.grid().n_steps() != st.history_steps)
    throw ValidationError("eval_coefficient: segment must cover exactly [-h, 0]");
  return sigma.value(apply_stencil(st, segment.values(), segment.size() - 1));
}

/// c_{gamma,lambda} = (2^{gamma+lambda} - 2)^{-1}.
inline double young_constant(double gamma, double lambda) { return sewing_constant(gamma + lambda); }

/// eps = [4 M c_{gamma,lambda} ||x||_gamma]^{-1/gamma} ^ 1.
inline double window_epsilon(double M, double gamma, double lambda, double x_seminorm) {
  const double base = 4.0 * M * young_constant(gamma, lambda) * x_seminorm;
  if (!(base > 0.0)) return 1.0;
  return std::min(1.0, std::pow(base, -1.0 / gamma));
}

/// eta = [2 (1 + c_{gamma,lambda}) c_N ||x||_gamma]^{-1/gamma} ^ eps.
inline double contraction_eta(double gamma, double lambda, double c_N, double x_seminorm, double eps) {
  const double base = 2.0 * (1.0 + young_constant(gamma, lambda)) * c_N * x_seminorm;
  if (!(base > 0.0)) return eps;
  return std::min(eps, std::pow(base, -1.0 / gamma));
}

struct SolveOptions {
  double tol = 1e-12;
  std::size_t max_iter = 200;
  double gamma = 0.7;   // driver exponent for ||x||_gamma
  double lambda = 0.6;  // solution exponent, 1/2 < lambda < gamma
  /// Fixed window length in steps; 0 uses the contraction window clamped to >= min_window_steps.
  std::size_t window_steps = 0;
  std::size_t min_window_steps = 4;
};

struct WindowRecord {
  std::size_t start = 0;  // node indices on the [-h, T] grid
  std::size_t end = 0;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  double c_N = 0.0;
  double eta = 0.0;
};

struct SolveReport {
  GridPath y;  // on [-h, T]
  std::size_t origin = 0;  // node index of t = 0
  std::vector<WindowRecord> windows;
  double epsilon_used = 0.0;
  double eta_used = 0.0;
  double x_seminorm = 0.0;
  double seminorm_lambda = 0.0;

  /// Solution restricted to [0, T].
  GridPath on_horizon() const { return y.slice(origin, y.size() - 1); }
};

namespace detail {

// 1 / (k dt)^lambda for k = 0..k_max (entry 0 unused).
inline std::vector<double> inv_pow_table(std::size_t k_max, double lambda, double dt) {
  std::vector<double> t(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) t[k] = std::pow(static_cast<double>(k) * dt, -lambda);
  return t;
}

// Running lambda-seminorm of rows [0, upto] of a path, extended node by node.
class RunningSeminorm {
public:
  RunningSeminorm(double lambda, double dt, std::size_t max_rows) : inv_(inv_pow_table(max_rows, lambda, dt)) {}

  void extend(const Eigen::MatrixXd& path, std::size_t upto) {
    for (; next_ <= upto; ++next_) {
      const auto rn = path.row(static_cast<Eigen::Index>(next_));
      for (std::size_t i = 0; i < next_; ++i) {
        const double d = (rn - path.row(static_cast<Eigen::Index>(i))).norm();
        value_ = std::max(value_, d * inv_[next_ - i]);
      }
    }
  }
  double value() const { return value_; }

private:
  std::vector<double> inv_;
  std::size_t next_ = 0;
  double value_ = 0.0;
};

inline double window_seminorm(const Eigen::MatrixXd& diff, const std::vector<double>& inv) {
  double best = 0.0;
  const auto n = static_cast<std::size_t>(diff.rows());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (diff.row(static_cast<Eigen::Index>(j)) - diff.row(static_cast<Eigen::Index>(i))).norm();
      best = std::max(best, d * inv[j - i]);
    }
  return best;
}

}  // namespace detail

/// Picard iteration on the window of nodes [a, b] of `path`:
///   Y_{j+1} = Y_a + sum_{i=a}^{j} step(path, i),  a <= j < b,
/// where step(path, i) may read rows <= i. Rows a+1..b are overwritten.
template <class Step>
WindowRecord picard_window(Eigen::MatrixXd& path, std::size_t a, std::size_t b, Step&& step, double lambda,
                           double dt, double tol, std::size_t max_iter) {
  WindowRecord rec;
  rec.start = a;
  rec.end = b;
  const Eigen::Index len = static_cast<Eigen::Index>(b - a + 1);
  for (std::size_t j = a + 1; j <= b; ++j) path.row(static_cast<Eigen::Index>(j)) = path.row(static_cast<Eigen::Index>(a));

  const auto inv = detail::inv_pow_table(b - a, lambda, dt);
  Eigen::MatrixXd next(len, path.cols());
  for (std::size_t it = 1; it <= max_iter; ++it) {
    next.row(0) = path.row(static_cast<Eigen::Index>(a));
    Eigen::RowVectorXd acc = path.row(static_cast<Eigen::Index>(a));
    for (std::size_t j = a; j < b; ++j) {
      acc += step(path, j).transpose();
      next.row(static_cast<Eigen::Index>(j - a + 1)) = acc;
    }
    if (!next.allFinite())
      throw NumericalError("Picard iteration diverged (non-finite iterate) on window starting at node " +
                           std::to_string(a));
    const Eigen::MatrixXd diff = next - path.middleRows(static_cast<Eigen::Index>(a), len);
    const double res = detail::window_seminorm(diff, inv);
    path.middleRows(static_cast<Eigen::Index>(a), len) = next;
    rec.iterations = it;
    rec.residual = res;
    rec.residual_history.push_back(res);
    if (res <= tol) return rec;
  }
  throw NumericalError("Picard iteration did not reach tolerance within " + std::to_string(max_iter) +
                       " iterations (last residual " + std::to_string(rec.residual) + ")");
}

/// Initial segment xi on [-h, 0], sampled with the solver's step.
inline GridPath constant_segment(const Eigen::VectorXd& value, double h, std::size_t steps) {
  GridPath p(UniformGrid(-h, 0.0, steps), static_cast<std::size_t>(value.size()));
  for (std::size_t i = 0; i < p.size(); ++i) p.row(i) = value.transpose();
  return p;
}

inline GridPath constant_segment(double value, double h, std::size_t steps) {
  return constant_segment(Eigen::VectorXd::Constant(1, value), h, steps);
}

namespace detail {

inline void check_problem(const GridPath& x, const GridPath& xi, const Coefficient& sigma, const Stencil& st) {
  if (x.grid().t_start() != 0.0) throw ValidationError("solver: driver grid must start at 0");
  if (std::abs(xi.grid().t_end()) > 1e-12) throw ValidationError("solver: initial segment must end at 0");
  if (std::abs(xi.grid().dt() - x.grid().dt()) > 1e-12 * x.grid().dt())
    throw ValidationError("solver: initial segment and driver use different steps");
  if (xi.grid().n_steps() != st.history_steps)
    throw ValidationError("solver: initial segment must cover [-h, 0]");
  if (xi.dim() != sigma.n) throw ValidationError("solver: initial segment dimension differs from sigma's n");
  if (x.dim() != sigma.d) throw ValidationError("solver: driver dimension differs from sigma's d");
}

inline GridPath extended_path(const GridPath& x, const GridPath& xi) {
  const std::size_t hist = xi.grid().n_steps();
  GridPath y(UniformGrid(xi.grid().t_start(), x.grid().t_end(), hist + x.grid().n_steps()), xi.dim());
  y.values().topRows(static_cast<Eigen::Index>(hist + 1)) = xi.values();
  return y;
}

}  // namespace detail

/// Solve the delay equation driven by x from the initial segment xi.
inline SolveReport solve_delay(const GridPath& x, const GridPath& xi, const Coefficient& sigma,
                               const DelayKernel& kernel, const SolveOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ValidationError("solve_delay: tol must be positive");
  const double dt = x.grid().dt();
  const Stencil st = compile_stencil(kernel, dt);
  detail::check_problem(x, xi, sigma, st);

  SolveReport rep;
  rep.y = detail::extended_path(x, xi);
  rep.origin = st.history_steps;
  const std::size_t last = rep.y.size() - 1;

  rep.x_seminorm = holder_seminorm(x, opt.gamma).seminorm;
  const double M = std::isfinite(sigma.bound_M) ? sigma.bound_M : 1.0;
  rep.epsilon_used = window_epsilon(M, opt.gamma, opt.lambda, rep.x_seminorm);
  rep.eta_used = std::numeric_limits<double>::infinity();

  auto& Y = rep.y.values();
  const auto d = static_cast<Eigen::Index>(sigma.d);
  auto step = [&](const Eigen::MatrixXd& path, std::size_t j) -> Eigen::VectorXd {
    const Eigen::MatrixXd q = sigma.value(apply_stencil(st, path, j));
    const std::size_t xi_node = j - rep.origin;
    Eigen::VectorXd dx(d);
    for (Eigen::Index c = 0; c < d; ++c) dx(c) = x(xi_node + 1, static_cast<std::size_t>(c)) - x(xi_node, static_cast<std::size_t>(c));
    return q * dx;
  };

  detail::RunningSeminorm hist_norm(opt.lambda, dt, rep.y.size());
  std::size_t a = rep.origin;
  while (a < last) {
    hist_norm.extend(Y, a);
    const double c_N = 2.0 * M * (1.0 + hist_norm.value());
    const double eta = contraction_eta(opt.gamma, opt.lambda, c_N, rep.x_seminorm, rep.epsilon_used);
    std::size_t w = opt.window_steps;
    if (w == 0) w = std::max(opt.min_window_steps, static_cast<std::size_t>(std::floor(eta / dt)));
    const std::size_t b = std::min(last, a + w);
    WindowRecord rec = picard_window(Y, a, b, step, opt.lambda, dt, opt.tol, opt.max_iter);
    rec.c_N = c_N;
    rec.eta = eta;
    rep.eta_used = std::min(rep.eta_used, eta);
    rep.windows.push_back(std::move(rec));
    a = b;
  }
  hist_norm.extend(Y, last);
  rep.seminorm_lambda = hist_norm.value();
  return rep;
}

enum class StepScheme { left_point, trapezoid };

/// Segment-by-segment solution for discrete lags. Each segment has the length
/// of the smallest positive lag. Lagged terms read finished segments, and a
/// lag-0 atom makes the segment equation an ordinary Young equation in the
/// current value. `trapezoid` integrates it with
/// a predictor-corrector step, `left_point` with the plain Riemann step.
inline GridPath method_of_steps(const GridPath& x, const GridPath& xi, const Coefficient& sigma,
                                const DelayKernel& kernel, StepScheme scheme = StepScheme::trapezoid) {
  if (kernel.variant() != DelayKernel::Variant::discrete)
    throw ValidationError("method_of_steps: only discrete delay kernels are supported");
  const double dt = x.grid().dt();
  const Stencil st = compile_stencil(kernel, dt);
  detail::check_problem(x, xi, sigma, st);

  std::size_t seg = 0;
  for (std::size_t off : st.offsets)
    if (off > 0) seg = seg == 0 ? off : std::min(seg, off);
  if (seg == 0) throw ValidationError("method_of_steps: needs at least one positive lag");
  if (x.grid().n_steps() % seg != 0)
    throw ValidationError("method_of_steps: T must be an integer multiple of the smallest lag");

  GridPath y = detail::extended_path(x, xi);
  auto& Y = y.values();
  const std::size_t origin = st.history_steps;
  const auto d = static_cast<Eigen::Index>(sigma.d);

  // Lagged part of the stencil is frozen data; lag-0 weight acts on the current value.
  double w0 = 0.0;
  for (std::size_t k = 0; k < st.offsets.size(); ++k)
    if (st.offsets[k] == 0) w0 += st.weights[k];
  auto frozen = [&](std::size_t j) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(Y.cols());
    for (std::size_t k = 0; k < st.offsets.size(); ++k)
      if (st.offsets[k] > 0) acc += st.weights[k] * Y.row(static_cast<Eigen::Index>(j - st.offsets[k])).transpose();
    return acc;
  };
  auto incr = [&](std::size_t j) {
    Eigen::VectorXd dx(d);
    for (Eigen::Index c = 0; c < d; ++c)
      dx(c) = x(j - origin + 1, static_cast<std::size_t>(c)) - x(j - origin, static_cast<std::size_t>(c));
    return dx;
  };

  const std::size_t segments = x.grid().n_steps() / seg;
  for (std::size_t k = 0; k < segments; ++k) {
    for (std::size_t j = origin + k * seg; j < origin + (k + 1) * seg; ++j) {
      const Eigen::VectorXd yj = Y.row(static_cast<Eigen::Index>(j)).transpose();
      const Eigen::VectorXd dx = incr(j);
      const Eigen::MatrixXd q0 = sigma.value(w0 * yj + frozen(j));
      Eigen::VectorXd ynext = yj + q0 * dx;
      if (scheme == StepScheme::trapezoid) {
        const Eigen::MatrixXd q1 = sigma.value(w0 * ynext + frozen(j + 1));
        ynext = yj + 0.5 * (q0 + q1) * dx;
      }
      Y.row(static_cast<Eigen::Index>(j + 1)) = ynext.transpose();
    }
  }
  if (!Y.allFinite()) throw NumericalError("method_of_steps: non-finite values");
  return y;
}

struct MomentReport {
  double y_seminorm = 0.0;
  double xi_seminorm = 0.0;
  double x_seminorm = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

/// ||y||_{lambda,[-h,T]} / max(||xi||_lambda, ||x||_gamma^{lambda/(gamma+lambda-1)}, ||x||_gamma).
inline MomentReport moment_bound_check(const SolveReport& report, const GridPath& x, const GridPath& xi, double gamma,
                                       double lambda) {
  MomentReport m;
  m.y_seminorm = holder_seminorm(report.y, lambda).seminorm;
  m.xi_seminorm = holder_seminorm(xi, lambda).seminorm;
  m.x_seminorm = holder_seminorm(x, gamma).seminorm;
  m.denominator = std::max({m.xi_seminorm, std::pow(m.x_seminorm, lambda / (gamma + lambda - 1.0)), m.x_seminorm});
  m.ratio = m.denominator > 0.0 ? m.y_seminorm / m.denominator : 0.0;
  return m;
}

}  // namespace fde
