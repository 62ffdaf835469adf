#pragma once

// Malliavin covariance matrix Q_t = <D y_t, D y_t>_H assembled from Phi via
// the K* quadrature, the lower bound L_t, and kernel density estimation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fde/fbm.hpp"
#include "fde/sensitivity.hpp"
#include "fde/stats.hpp"

namespace fde {

struct MalliavinMatrix {
  double t = 0.0;
  Eigen::MatrixXd Q;
  Eigen::VectorXd eigenvalues;  // ascending
  double det = 0.0;

  double lambda_min() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
};

inline MalliavinMatrix make_malliavin_matrix(double t, Eigen::MatrixXd Q) {
  MalliavinMatrix m;
  m.t = t;
  m.Q = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.Q, Eigen::EigenvaluesOnly);
  m.eigenvalues = es.eigenvalues();
  m.det = m.eigenvalues.prod();
  return m;
}

namespace detail {

// Cell values on the K* grid of the step function r -> F(r) 1_{[0,t]}(r) from
// node samples F(r_k) (rows), each cell the mean of its two endpoint samples.
inline Eigen::MatrixXd cells_from_nodes(const Eigen::MatrixXd& node_values, std::size_t t_cell) {
  const Eigen::Index cells = node_values.rows() - 1;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(cells, node_values.cols());
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(t_cell); ++j)
    c.row(j) = 0.5 * (node_values.row(j) + node_values.row(j + 1));
  return c;
}

// Q^{ij} = sum_l <F^{il}, F^{jl}>_H for cell values F (cells x n d, entry (i, l) at column i d + l).
inline Eigen::MatrixXd gram_from_cells(const Eigen::MatrixXd& cells, std::size_t n, std::size_t d,
                                       const KStarMatrix& kstar) {
  const Eigen::MatrixXd V = kstar.action() * cells;  // quadrature nodes x n d
  const Eigen::VectorXd& w = kstar.weights();
  const auto N = static_cast<Eigen::Index>(n);
  const auto D = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = i; j < N; ++j) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < D; ++l) s += (w.array() * V.col(i * D + l).array() * V.col(j * D + l).array()).sum();
      Q(i, j) = s;
      Q(j, i) = s;
    }
  return Q;
}

inline std::size_t coarse_time_index(const UniformGrid& fine, std::size_t stride, const KStarMatrix& kstar,
                                     std::size_t t_index) {
  if (!(kstar.grid() == fine.coarsen(stride)))
    throw ValidationError("malliavin: K* grid must equal the (coarsened) r-grid");
  if (t_index % stride != 0 || t_index > fine.n_steps())
    throw ValidationError("malliavin: t must be a node of the r-grid");
  return t_index / stride;
}

}  // namespace detail

/// Q_t for t = node t_index of the field's grid.
inline MalliavinMatrix malliavin_matrix(const SensitivityField& phi, std::size_t t_index, const KStarMatrix& kstar) {
  const std::size_t tc = detail::coarse_time_index(phi.grid, phi.r_stride, kstar, t_index);
  const Eigen::MatrixXd cells = detail::cells_from_nodes(phi.at_time(t_index), tc);
  return make_malliavin_matrix(phi.grid.node(t_index), detail::gram_from_cells(cells, phi.n, phi.d, kstar));
}

struct LowerBoundReport {
  Eigen::MatrixXd L;
  double lambda_min = 0.0;
  double c = 0.0;      // calibrated constant
  double bound = 0.0;  // c eps t^{2H}
  bool pass = false;
};

/// L_t = || q 1_{[0,t]} ||_H^2 (an n x n matrix) from the coefficient values
/// q along the solution, compared with c eps t^{2H}. The constant c is
/// calibrated on q = sqrt(eps) Id with the same quadrature.
inline LowerBoundReport lower_bound_Lt(const std::vector<Eigen::MatrixXd>& q, const UniformGrid& grid,
                                       std::size_t r_stride, std::size_t t_index, const KStarMatrix& kstar,
                                       double eps) {
  if (!(eps > 0.0)) throw ValidationError("lower_bound_Lt: non-degeneracy constant eps must be positive");
  if (q.size() != grid.n_nodes()) throw ValidationError("lower_bound_Lt: one coefficient value per grid node expected");
  const std::size_t tc = detail::coarse_time_index(grid, r_stride, kstar, t_index);
  const auto n = static_cast<std::size_t>(q.front().rows());
  const auto d = static_cast<std::size_t>(q.front().cols());

  Eigen::MatrixXd nodes(static_cast<Eigen::Index>(kstar.grid().n_nodes()), static_cast<Eigen::Index>(n * d));
  for (std::size_t k = 0; k < kstar.grid().n_nodes(); ++k) {
    const Eigen::MatrixXd& qk = q[k * r_stride];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < d; ++l)
        nodes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i * d + l)) =
            qk(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
  }
  LowerBoundReport rep;
  rep.L = detail::gram_from_cells(detail::cells_from_nodes(nodes, tc), n, d, kstar);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (rep.L + rep.L.transpose()), Eigen::EigenvaluesOnly);
  rep.lambda_min = es.eigenvalues()(0);

  const double t = grid.node(t_index);
  const double scale = std::pow(t, 2.0 * kstar.hurst().H());
  if (scale > 0.0) {
    const Eigen::VectorXd ind = indicator_cells(kstar.grid(), t);
    rep.c = kstar.inner(ind, ind) / scale;
  }
  rep.bound = rep.c * eps * scale;
  rep.pass = rep.lambda_min >= rep.bound * (1.0 - 1e-10);
  return rep;
}

struct DensityEstimate {
  std::size_t sample_count = 0;
  std::vector<double> bandwidth;          // per coordinate
  std::vector<std::vector<double>> axes;  // gridded output for n <= 2
  std::vector<double> values;             // row-major over axes (last axis fastest)
  Eigen::MatrixXd samples;

  /// Kernel estimate at an arbitrary point of R^n.
  double evaluate(const Eigen::VectorXd& y) const {
    const auto n = samples.cols();
    double norm = 1.0;
    for (Eigen::Index c = 0; c < n; ++c) norm *= bandwidth[static_cast<std::size_t>(c)] * std::sqrt(2.0 * std::numbers::pi);
    double s = 0.0;
    for (Eigen::Index k = 0; k < samples.rows(); ++k) {
      double e = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double z = (y(c) - samples(k, c)) / bandwidth[static_cast<std::size_t>(c)];
        e += z * z;
      }
      s += std::exp(-0.5 * e);
    }
    return s / (norm * static_cast<double>(samples.rows()));
  }

  /// Trapezoid integral of the gridded values.
  double integral() const {
    if (axes.empty()) return 0.0;
    auto trap_w = [](const std::vector<double>& ax, std::size_t i) {
      const double h = ax[1] - ax[0];
      return (i == 0 || i + 1 == ax.size()) ? 0.5 * h : h;
    };
    double s = 0.0;
    if (axes.size() == 1) {
      for (std::size_t i = 0; i < values.size(); ++i) s += trap_w(axes[0], i) * values[i];
    } else {
      const std::size_t m = axes[1].size();
      for (std::size_t i = 0; i < axes[0].size(); ++i)
        for (std::size_t j = 0; j < m; ++j) s += trap_w(axes[0], i) * trap_w(axes[1], j) * values[i * m + j];
    }
    return s;
  }
};

/// Normal-reference bandwidth sd_i (4 / ((n + 2) N))^{1/(n+4)} per coordinate.
inline std::vector<double> silverman_bandwidth(const Eigen::MatrixXd& samples) {
  const auto N = static_cast<double>(samples.rows());
  const auto n = static_cast<double>(samples.cols());
  const double factor = std::pow(4.0 / ((n + 2.0) * N), 1.0 / (n + 4.0));
  std::vector<double> h;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    const double mu = samples.col(c).mean();
    const double var = (samples.col(c).array() - mu).square().sum() / (N - 1.0);
    h.push_back(std::sqrt(var) * factor);
  }
  return h;
}

struct DensityOptions {
  std::optional<std::vector<double>> bandwidth;
  std::size_t points_1d = 401;
  std::size_t points_2d = 81;
  double pad = 4.0;  // grid extends this many bandwidths beyond the sample range
};

/// Gaussian product-kernel estimate from samples (rows are draws in R^n).
inline DensityEstimate density_estimate(const Eigen::MatrixXd& samples, const DensityOptions& opt = {}) {
  if (samples.rows() < 100) throw ValidationError("density_estimate: need at least 100 samples");
  if (samples.cols() < 1) throw ValidationError("density_estimate: samples need at least one coordinate");
  if (!samples.allFinite()) throw ValidationError("density_estimate: samples must be finite");
  DensityEstimate est;
  est.sample_count = static_cast<std::size_t>(samples.rows());
  est.samples = samples;
  est.bandwidth = opt.bandwidth ? *opt.bandwidth : silverman_bandwidth(samples);
  if (est.bandwidth.size() != static_cast<std::size_t>(samples.cols()))
    throw ValidationError("density_estimate: one bandwidth per coordinate expected");
  for (double b : est.bandwidth)
    if (!(b > 0.0)) throw ValidationError("density_estimate: degenerate samples (zero spread) or non-positive bandwidth");

  if (samples.cols() > 2) return est;
  const std::size_t pts = samples.cols() == 1 ? opt.points_1d : opt.points_2d;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    const double lo = samples.col(c).minCoeff() - opt.pad * est.bandwidth[static_cast<std::size_t>(c)];
    const double hi = samples.col(c).maxCoeff() + opt.pad * est.bandwidth[static_cast<std::size_t>(c)];
    std::vector<double> ax(pts);
    for (std::size_t i = 0; i < pts; ++i) ax[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(pts - 1);
    est.axes.push_back(std::move(ax));
  }
  if (samples.cols() == 1) {
    for (double y : est.axes[0]) est.values.push_back(est.evaluate(Eigen::VectorXd::Constant(1, y)));
  } else {
    for (double y0 : est.axes[0])
      for (double y1 : est.axes[1]) est.values.push_back(est.evaluate(Eigen::Vector2d(y0, y1)));
  }
  return est;
}

struct TimeSummary {
  double t = 0.0;
  std::size_t count = 0;
  std::vector<double> det_quantiles;         // at the probabilities below
  std::vector<double> lambda_min_quantiles;  // at the probabilities below
  double min_det = 0.0;
  double median_lambda_min = 0.0;
};

struct DetQTailReport {
  std::vector<double> probabilities{0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
  std::vector<TimeSummary> per_time;  // ascending t
  /// Slope of log median lambda_min against log t (NaN with fewer than two times).
  double slope = 0.0;
  bool all_det_positive = true;
};

inline DetQTailReport detQ_tail_report(const std::vector<MalliavinMatrix>& batch) {
  if (batch.empty()) throw ValidationError("detQ_tail_report: empty batch");
  DetQTailReport rep;
  std::map<double, std::vector<const MalliavinMatrix*>> by_t;
  for (const auto& m : batch) by_t[m.t].push_back(&m);
  std::vector<double> lt, lm;
  for (const auto& [t, ms] : by_t) {
    TimeSummary s;
    s.t = t;
    s.count = ms.size();
    std::vector<double> dets, lmins;
    for (const auto* m : ms) {
      dets.push_back(m->det);
      lmins.push_back(m->lambda_min());
      if (!(m->det > 0.0)) rep.all_det_positive = false;
    }
    for (double p : rep.probabilities) {
      s.det_quantiles.push_back(quantile(dets, p));
      s.lambda_min_quantiles.push_back(quantile(lmins, p));
    }
    s.min_det = *std::min_element(dets.begin(), dets.end());
    s.median_lambda_min = quantile(lmins, 0.5);
    if (t > 0.0 && s.median_lambda_min > 0.0) {
      lt.push_back(std::log(t));
      lm.push_back(std::log(s.median_lambda_min));
    }
    rep.per_time.push_back(std::move(s));
  }
  rep.slope = lt.size() >= 2 ? linear_fit(lt, lm).slope : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace fde
