#pragma once

// Derivatives of the delay solution with respect to the driver: the
// directional derivative Dy(x)(k) and the kernel Phi_t(r) with
// Dy_t(x)(k) = int_0^t Phi_t(r) dk_r.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fde/delay.hpp"
#include "fde/young.hpp"

namespace fde {

/// sigma and its gradient evaluated along a solved path, one entry per step
/// s = 0..N-1 of the driver grid: q[s] = sigma(eta_s), jac[s] = the n x n
/// matrix with column m equal to d sigma / d eta_m (eta_s) times dx_s, where
/// eta_s = int y_{s+theta} nu(dtheta).
struct GradCoefficient {
  Stencil stencil;
  std::size_t n = 1;
  std::size_t d = 1;
  std::vector<Eigen::MatrixXd> q;    // n x d, nodes 0..N (q at t = T included)
  std::vector<Eigen::MatrixXd> jac;  // n x n, steps 0..N-1
};

inline GradCoefficient grad_coefficient(const SolveReport& sol, const GridPath& x, const Coefficient& sigma,
                                        const DelayKernel& kernel) {
  GradCoefficient g;
  g.stencil = compile_stencil(kernel, x.grid().dt());
  g.n = sigma.n;
  g.d = sigma.d;
  const std::size_t N = x.grid().n_steps();
  if (sol.y.size() != sol.origin + N + 1) throw ValidationError("grad_coefficient: solution and driver grids differ");
  const auto n = static_cast<Eigen::Index>(sigma.n);
  g.q.reserve(N + 1);
  g.jac.reserve(N);
  for (std::size_t s = 0; s <= N; ++s) {
    const Eigen::VectorXd eta = apply_stencil(g.stencil, sol.y.values(), sol.origin + s);
    g.q.push_back(sigma.value(eta));
    if (s == N) break;
    const Eigen::VectorXd dx = (x.row(s + 1) - x.row(s)).transpose();
    const auto grads = sigma.grad(eta);
    Eigen::MatrixXd J(n, n);
    for (Eigen::Index m = 0; m < n; ++m) J.col(m) = grads[static_cast<std::size_t>(m)] * dx;
    g.jac.push_back(std::move(J));
  }
  return g;
}

struct LinearSolveOptions {
  double tol = 1e-12;
  std::size_t max_iter = 200;
  double lambda = 0.6;
  std::size_t window_steps = 16;
};

/// z = Dy(x)(k) on [0, T], solving
///   z_t = int_0^t q_s dk_s + int_0^t J_s (A z)_s
/// with z = 0 on [-h, 0], by Picard iteration per window.
inline GridPath directional_derivative(const SolveReport& sol, const GridPath& x, const GridPath& k,
                                       const Coefficient& sigma, const DelayKernel& kernel,
                                       const LinearSolveOptions& opt = {}) {
  require_same_grid(x, k, "directional_derivative");
  if (k.dim() != sigma.d) throw ValidationError("directional_derivative: perturbation dimension differs from d");
  if (k.row(0).norm() != 0.0) throw ValidationError("directional_derivative: perturbation must start at 0");
  if (opt.window_steps == 0) throw ValidationError("directional_derivative: window_steps must be positive");
  const GradCoefficient g = grad_coefficient(sol, x, sigma, kernel);
  const std::size_t origin = sol.origin;
  const std::size_t N = x.grid().n_steps();

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(origin + N + 1), static_cast<Eigen::Index>(sigma.n));
  auto step = [&](const Eigen::MatrixXd& path, std::size_t j) -> Eigen::VectorXd {
    const std::size_t s = j - origin;
    const Eigen::VectorXd dk = (k.row(s + 1) - k.row(s)).transpose();
    return g.q[s] * dk + g.jac[s] * apply_stencil(g.stencil, path, j);
  };
  for (std::size_t a = origin; a < origin + N;) {
    const std::size_t b = std::min(origin + N, a + opt.window_steps);
    picard_window(Z, a, b, step, opt.lambda, x.grid().dt(), opt.tol, opt.max_iter);
    a = b;
  }
  return GridPath(x.grid(), Eigen::MatrixXd(Z.bottomRows(static_cast<Eigen::Index>(N + 1))));
}

/// Phi_t(r) for fixed r = node r_index and t = node r_index..t_last, marched
/// forward from Phi_r(r) = q_r:
///   Phi_{s+1}(r) = Phi_s(r) + J_s (A Phi(r))_s,   Phi_s(r) = 0 for s < r.
/// Returned as (t_last + 1) x (n d) rows, entry (i, j) stored at column i d + j;
/// rows t < r are zero.
inline Eigen::MatrixXd solve_phi(const GradCoefficient& g, std::size_t r_index, std::size_t t_last) {
  const std::size_t N = g.jac.size();
  if (r_index > t_last || t_last > N) throw ValidationError("solve_phi: need r <= t <= T on the grid");
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto d = static_cast<Eigen::Index>(g.d);
  const std::size_t hist = g.stencil.history_steps;

  // Padded storage so stencil reads before r see zeros: row hist + s holds Phi_s(r).
  std::vector<Eigen::MatrixXd> phi(hist + t_last + 1, Eigen::MatrixXd::Zero(n, d));
  phi[hist + r_index] = g.q[r_index];
  for (std::size_t s = r_index; s < t_last; ++s) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, d);
    for (std::size_t k = 0; k < g.stencil.offsets.size(); ++k)
      acc += g.stencil.weights[k] * phi[hist + s - g.stencil.offsets[k]];
    phi[hist + s + 1] = phi[hist + s] + g.jac[s] * acc;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t_last + 1), n * d);
  for (std::size_t s = r_index; s <= t_last; ++s)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out(static_cast<Eigen::Index>(s), i * d + j) = phi[hist + s](i, j);
  if (!out.allFinite()) throw NumericalError("solve_phi: non-finite values");
  return out;
}

/// Phi_t(r) on r-nodes 0, m, 2m, ... (every `r_stride`-th node of the driver
/// grid) and all t-nodes. values[k] is the column for r = node k * r_stride.
struct SensitivityField {
  UniformGrid grid;
  std::size_t r_stride = 1;
  std::size_t n = 1;
  std::size_t d = 1;
  std::vector<Eigen::MatrixXd> columns;

  std::size_t n_r() const { return columns.size(); }
  double r_node(std::size_t k) const { return grid.node(k * r_stride); }

  /// Phi_t(r_k)^{ij} with t = node t_index; zero when r_k > t.
  double value(std::size_t k, std::size_t t_index, std::size_t i, std::size_t j) const {
    return columns.at(k)(static_cast<Eigen::Index>(t_index), static_cast<Eigen::Index>(i * d + j));
  }

  /// Phi_t(r_k) for all k at one t-node: (n_r x n d).
  Eigen::MatrixXd at_time(std::size_t t_index) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_r()), static_cast<Eigen::Index>(n * d));
    for (std::size_t k = 0; k < n_r(); ++k) out.row(static_cast<Eigen::Index>(k)) = columns[k].row(static_cast<Eigen::Index>(t_index));
    return out;
  }
};

inline SensitivityField sensitivity_field(const GradCoefficient& g, const UniformGrid& grid, std::size_t r_stride = 1) {
  if (grid.n_steps() != g.jac.size()) throw ValidationError("sensitivity_field: grid differs from the solution grid");
  if (r_stride == 0 || grid.n_steps() % r_stride != 0)
    throw ValidationError("sensitivity_field: r_stride must divide the number of steps");
  SensitivityField f{grid, r_stride, g.n, g.d, {}};
  for (std::size_t r = 0; r <= grid.n_steps(); r += r_stride) f.columns.push_back(solve_phi(g, r, grid.n_steps()));
  return f;
}

/// sum_j int_0^t Phi_t^{ij}(r) dk^j_r for every node t (left-point sums in r).
inline GridPath phi_representation(const GradCoefficient& g, const GridPath& k) {
  const std::size_t N = g.jac.size();
  if (k.grid().n_steps() != N || k.dim() != g.d) throw ValidationError("phi_representation: perturbation shape mismatch");
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto d = static_cast<Eigen::Index>(g.d);
  GridPath out(k.grid(), g.n);
  for (std::size_t r = 0; r < N; ++r) {
    const Eigen::MatrixXd col = solve_phi(g, r, N);
    const Eigen::VectorXd dk = (k.row(r + 1) - k.row(r)).transpose();
    for (std::size_t t = r + 1; t <= N; ++t) {
      const Eigen::RowVectorXd flat = col.row(static_cast<Eigen::Index>(t));
      const Eigen::MatrixXd phi =
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, d);
      out.row(t) += (phi * dk).transpose();
    }
  }
  return out;
}

/// (2 lambda + gamma - 1) / ((gamma + lambda)(gamma + lambda - 1)).
inline double linear_moment_exponent(double gamma, double lambda) {
  return (2.0 * lambda + gamma - 1.0) / ((gamma + lambda) * (gamma + lambda - 1.0));
}

/// D_{gamma,lambda} = (||xi||_lambda ||x||_gamma)^{1/(gamma+lambda)} + ||x||_gamma^{1/gamma}
///                  + ||x||_gamma^{(2 lambda + gamma - 1)/((gamma+lambda)(gamma+lambda-1))},
/// with each power of 0 taken as 0.
inline double linear_moment_D(double xi_seminorm, double x_seminorm, double gamma, double lambda) {
  if (!(gamma + lambda > 1.0)) throw ValidationError("linear_moment_D: need gamma + lambda > 1");
  if (xi_seminorm < 0.0 || x_seminorm < 0.0) throw ValidationError("linear_moment_D: seminorms must be >= 0");
  auto pw = [](double b, double e) { return b > 0.0 ? std::pow(b, e) : 0.0; };
  return pw(xi_seminorm * x_seminorm, 1.0 / (gamma + lambda)) + pw(x_seminorm, 1.0 / gamma) +
         pw(x_seminorm, linear_moment_exponent(gamma, lambda));
}

/// H_0 = (7 + sqrt(17)) / 16: the exponent above equals 2 at gamma = lambda = H_0.
inline double hurst_threshold() { return (7.0 + std::sqrt(17.0)) / 16.0; }

}  // namespace fde
