#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fde/grid.hpp"

namespace fde {

struct QuadratureRule {
  std::vector<double> nodes;    // on (0, 1)
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Legendre rule on (0, 1) via the Golub-Welsch eigenproblem.
inline QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) throw ValidationError("gauss_legendre: need at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double b = kk / std::sqrt(4.0 * kk * kk - 1.0);
    J(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule r;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double x = es.eigenvalues()(ii);
    const double v = es.eigenvectors()(0, ii);
    r.nodes.push_back(0.5 * (x + 1.0));
    r.weights.push_back(v * v);  // 2 v^2 on (-1, 1), halved for (0, 1)
  }
  return r;
}

}  // namespace fde
