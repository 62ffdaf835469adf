#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fde/grid.hpp"

namespace fde {

/// sigma: R^n -> R^{n x d} with first and second derivatives and declared
/// bounds. grad(eta)[m] is d sigma / d eta_m (an n x d matrix);
/// hess(eta)[m * n + k] is d^2 sigma / d eta_m d eta_k.
struct Coefficient {
  std::string name;
  std::vector<double> params;
  std::size_t n = 1;
  std::size_t d = 1;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> value;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> grad;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> hess;
  double bound_M = std::numeric_limits<double>::infinity();
  double grad_bound = std::numeric_limits<double>::infinity();
  double nondeg_eps = 0.0;
};

/// sigma == c * Id_{n x d}.
inline Coefficient constant_coefficient(double c, std::size_t n = 1, std::size_t d = 1) {
  Coefficient s;
  s.name = "constant";
  s.params = {c};
  s.n = n;
  s.d = d;
  const Eigen::MatrixXd val = c * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  s.value = [val](const Eigen::VectorXd&) { return val; };
  s.grad = [n, d](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)));
  };
  s.hess = [n, d](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(n * n,
                                        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)));
  };
  s.bound_M = std::abs(c) * std::sqrt(static_cast<double>(std::min(n, d)));
  s.grad_bound = 0.0;
  s.nondeg_eps = n == d ? c * c : 0.0;
  return s;
}

/// sigma(eta) = diag(a + b sin(eta_i)), n = d. Non-degenerate with
/// eps = (|a| - |b|)^2 when |a| > |b|.
inline Coefficient scalar_sin_coefficient(double a, double b, std::size_t n = 1) {
  Coefficient s;
  s.name = "scalar-sin";
  s.params = {a, b};
  s.n = n;
  s.d = n;
  const auto N = static_cast<Eigen::Index>(n);
  s.value = [a, b, N](const Eigen::VectorXd& eta) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) m(i, i) = a + b * std::sin(eta(i));
    return m;
  };
  s.grad = [b, N](const Eigen::VectorXd& eta) {
    std::vector<Eigen::MatrixXd> g(static_cast<std::size_t>(N), Eigen::MatrixXd::Zero(N, N));
    for (Eigen::Index i = 0; i < N; ++i) g[static_cast<std::size_t>(i)](i, i) = b * std::cos(eta(i));
    return g;
  };
  s.hess = [b, N](const Eigen::VectorXd& eta) {
    std::vector<Eigen::MatrixXd> h(static_cast<std::size_t>(N * N), Eigen::MatrixXd::Zero(N, N));
    for (Eigen::Index i = 0; i < N; ++i) h[static_cast<std::size_t>(i * N + i)](i, i) = -b * std::sin(eta(i));
    return h;
  };
  s.bound_M = (std::abs(a) + std::abs(b)) * std::sqrt(static_cast<double>(n));
  s.grad_bound = std::abs(b);
  const double gap = std::abs(a) - std::abs(b);
  s.nondeg_eps = gap > 0.0 ? gap * gap : 0.0;
  return s;
}

/// sigma(eta)_{ij} = a delta_ij + (b / n) tanh(eta_j), n = d. The tanh part
/// has operator norm at most |b|, so sigma(e1) sigma(e2)^T >= (a^2 - 2|ab| - b^2) Id.
inline Coefficient bounded_tanh_matrix_coefficient(double a, double b, std::size_t n) {
  Coefficient s;
  s.name = "bounded-tanh-matrix";
  s.params = {a, b};
  s.n = n;
  s.d = n;
  const auto N = static_cast<Eigen::Index>(n);
  const double bn = b / static_cast<double>(n);
  s.value = [a, bn, N](const Eigen::VectorXd& eta) {
    Eigen::MatrixXd m = a * Eigen::MatrixXd::Identity(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < N; ++j) m(i, j) += bn * std::tanh(eta(j));
    return m;
  };
  s.grad = [bn, N](const Eigen::VectorXd& eta) {
    std::vector<Eigen::MatrixXd> g(static_cast<std::size_t>(N), Eigen::MatrixXd::Zero(N, N));
    for (Eigen::Index m = 0; m < N; ++m) {
      const double th = std::tanh(eta(m));
      g[static_cast<std::size_t>(m)].col(m).setConstant(bn * (1.0 - th * th));
    }
    return g;
  };
  s.hess = [bn, N](const Eigen::VectorXd& eta) {
    std::vector<Eigen::MatrixXd> h(static_cast<std::size_t>(N * N), Eigen::MatrixXd::Zero(N, N));
    for (Eigen::Index m = 0; m < N; ++m) {
      const double th = std::tanh(eta(m));
      h[static_cast<std::size_t>(m * N + m)].col(m).setConstant(-2.0 * bn * th * (1.0 - th * th));
    }
    return h;
  };
  s.bound_M = std::abs(a) * std::sqrt(static_cast<double>(n)) + std::abs(b);
  s.grad_bound = std::abs(b) / std::sqrt(static_cast<double>(n));
  const double e = a * a - 2.0 * std::abs(a * b) - b * b;
  s.nondeg_eps = e > 0.0 ? e : 0.0;
  return s;
}

/// sigma(eta) = eta (n = d = 1). Unbounded; used for linear test equations.
inline Coefficient linear_coefficient() {
  Coefficient s;
  s.name = "linear";
  s.value = [](const Eigen::VectorXd& eta) { return Eigen::MatrixXd::Constant(1, 1, eta(0)); };
  s.grad = [](const Eigen::VectorXd&) { return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Ones(1, 1)}; };
  s.hess = [](const Eigen::VectorXd&) { return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)}; };
  s.grad_bound = 1.0;
  return s;
}

/// Builtin registry used by experiment configs.
inline Coefficient make_builtin_coefficient(const std::string& name, const std::vector<double>& params,
                                            std::size_t n) {
  auto need = [&](std::size_t k) {
    if (params.size() != k)
      throw ValidationError("sigma '" + name + "' expects " + std::to_string(k) + " parameter(s)");
  };
  if (name == "constant") {
    need(1);
    return constant_coefficient(params[0], n, n);
  }
  if (name == "scalar-sin") {
    need(2);
    return scalar_sin_coefficient(params[0], params[1], n);
  }
  if (name == "bounded-tanh-matrix") {
    need(2);
    return bounded_tanh_matrix_coefficient(params[0], params[1], n);
  }
  throw ValidationError("unknown sigma builtin '" + name + "' (expected constant, scalar-sin, bounded-tanh-matrix)");
}

/// Spot check of |sigma| <= M and, if eps > 0, of
/// v^T sigma(e1) sigma(e2)^T v >= eps |v|^2 on the supplied points.
inline bool spot_check_coefficient(const Coefficient& s, const std::vector<Eigen::VectorXd>& points) {
  for (const auto& p : points)
    if (s.value(p).norm() > s.bound_M * (1.0 + 1e-12)) return false;
  if (s.nondeg_eps > 0.0) {
    for (const auto& p : points)
      for (const auto& q : points) {
        const Eigen::MatrixXd m = s.value(p) * s.value(q).transpose();
        const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        if (es.eigenvalues().minCoeff() < s.nondeg_eps * (1.0 - 1e-12)) return false;
      }
  }
  return true;
}

}  // namespace fde
