#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fde/delay.hpp"
#include "fde/fbm.hpp"
#include "fde/malliavin.hpp"
#include "fde/rng.hpp"
#include "fde/sensitivity.hpp"

namespace {

using fde::DelayKernel;
using fde::GridPath;
using fde::UniformGrid;

struct Field {
  fde::GradCoefficient g;
  fde::SensitivityField phi;
};

Field field_for(const fde::Coefficient& sigma, const UniformGrid& grid, std::size_t stride, std::uint64_t seed) {
  const auto kernel = DelayKernel::uniform(0.25, 5);
  const auto x = fde::sample_fbm(grid, 0.75, sigma.d, seed).path;
  const auto xi = fde::constant_segment(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(sigma.n), 0.2), 0.25,
                                        fde::compile_stencil(kernel, grid.dt()).history_steps);
  const auto sol = fde::solve_delay(x, xi, sigma, kernel);
  auto g = fde::grad_coefficient(sol, x, sigma, kernel);
  auto phi = fde::sensitivity_field(g, grid, stride);
  return {std::move(g), std::move(phi)};
}

TEST(MalliavinMatrix, EigenvaluesAndDeterminant) {
  Eigen::Matrix2d q;
  q << 2.0, 1.0, 1.0, 2.0;
  const auto m = fde::make_malliavin_matrix(0.5, q);
  EXPECT_NEAR(m.lambda_min(), 1.0, 1e-14);
  EXPECT_NEAR(m.det, 3.0, 1e-14);
  EXPECT_DOUBLE_EQ(m.t, 0.5);
}

TEST(MalliavinMatrix, ConstantCoefficientMatchesClosedForm) {
  const UniformGrid grid(0.0, 1.0, 64);
  const auto f = field_for(fde::constant_coefficient(0.8, 2, 2), grid, 4, 1);
  const auto kstar = fde::build_kstar(grid.coarsen(4), fde::HurstParams(0.75));
  for (std::size_t t : {16u, 32u, 64u}) {
    const auto m = fde::malliavin_matrix(f.phi, t, kstar);
    const double expect = 0.64 * std::pow(grid.node(t), 1.5);
    EXPECT_NEAR(m.Q(0, 0), expect, 1e-4 * expect);
    EXPECT_NEAR(m.Q(1, 1), expect, 1e-4 * expect);
    EXPECT_NEAR(m.Q(0, 1), 0.0, 1e-14);
  }
}

TEST(MalliavinMatrix, PositiveForNondegenerateCoefficient) {
  const UniformGrid grid(0.0, 1.0, 64);
  const auto sigma = fde::scalar_sin_coefficient(1.0, 0.5, 2);
  const auto kstar = fde::build_kstar(grid.coarsen(2), fde::HurstParams(0.75));
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = field_for(sigma, grid, 2, seed);
    const auto m = fde::malliavin_matrix(f.phi, 64, kstar);
    EXPECT_GT(m.det, 0.0);
    EXPECT_NEAR((m.Q - m.Q.transpose()).norm(), 0.0, 1e-14);
    const auto lb = fde::lower_bound_Lt(f.g.q, grid, 2, 64, kstar, sigma.nondeg_eps);
    EXPECT_TRUE(lb.pass) << lb.lambda_min << " " << lb.bound;
  }
}

TEST(MalliavinMatrix, RejectsMismatchedQuadratureGrid) {
  const UniformGrid grid(0.0, 1.0, 64);
  const auto f = field_for(fde::constant_coefficient(1.0), grid, 4, 1);
  const auto kstar = fde::build_kstar(grid.coarsen(2), fde::HurstParams(0.75));
  EXPECT_THROW(fde::malliavin_matrix(f.phi, 64, kstar), fde::ValidationError);
  const auto good = fde::build_kstar(grid.coarsen(4), fde::HurstParams(0.75));
  EXPECT_THROW(fde::malliavin_matrix(f.phi, 63, good), fde::ValidationError);
}

TEST(LowerBound, CalibrationCaseIsTight) {
  const UniformGrid grid(0.0, 1.0, 32);
  const auto kstar = fde::build_kstar(grid, fde::HurstParams(0.7));
  const double eps = 0.25;
  const std::vector<Eigen::MatrixXd> q(grid.n_nodes(), std::sqrt(eps) * Eigen::MatrixXd::Identity(2, 2));
  const auto lb = fde::lower_bound_Lt(q, grid, 1, 16, kstar, eps);
  EXPECT_NEAR(lb.lambda_min, lb.bound, 1e-12);
  EXPECT_TRUE(lb.pass);
  EXPECT_NEAR(lb.c, 1.0, 1e-3);
  EXPECT_THROW(fde::lower_bound_Lt(q, grid, 1, 16, kstar, 0.0), fde::ValidationError);
}

Eigen::MatrixXd normal_samples(std::size_t N, std::size_t dim, std::uint64_t seed) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    fde::CounterRng rng(seed, 0, c);
    for (std::size_t i = 0; i < N; ++i) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rng.normal();
  }
  return s;
}

TEST(Density, OneDimensionalGaussian) {
  const auto s = normal_samples(5000, 1, 3);
  const auto est = fde::density_estimate(s);
  EXPECT_EQ(est.axes.size(), 1u);
  EXPECT_EQ(est.values.size(), 401u);
  EXPECT_NEAR(est.integral(), 1.0, 1e-3);
  EXPECT_NEAR(est.evaluate(Eigen::VectorXd::Zero(1)), 1.0 / std::sqrt(2.0 * std::numbers::pi), 0.02);
  const double sd = std::sqrt((s.array() - s.mean()).square().sum() / 4999.0);
  EXPECT_NEAR(est.bandwidth[0], sd * std::pow(4.0 / (3.0 * 5000.0), 0.2), 1e-14);
}

TEST(Density, TwoDimensionalGrid) {
  const auto est = fde::density_estimate(normal_samples(2000, 2, 5));
  EXPECT_EQ(est.values.size(), 81u * 81u);
  EXPECT_NEAR(est.integral(), 1.0, 5e-3);
  EXPECT_NEAR(est.evaluate(Eigen::VectorXd::Zero(2)), 1.0 / (2.0 * std::numbers::pi), 0.02);
}

TEST(Density, ExplicitBandwidthAndHigherDimension) {
  fde::DensityOptions o;
  o.bandwidth = std::vector<double>{0.5, 0.5, 0.5};
  const auto est = fde::density_estimate(normal_samples(200, 3, 1), o);
  EXPECT_TRUE(est.values.empty());
  EXPECT_GT(est.evaluate(Eigen::VectorXd::Zero(3)), 0.0);
  o.bandwidth = std::vector<double>{0.5};
  EXPECT_THROW(fde::density_estimate(normal_samples(200, 3, 1), o), fde::ValidationError);
}

TEST(Density, RejectsSmallOrDegenerateSamples) {
  EXPECT_THROW(fde::density_estimate(normal_samples(99, 1, 1)), fde::ValidationError);
  EXPECT_THROW(fde::density_estimate(Eigen::MatrixXd::Ones(200, 1)), fde::ValidationError);
}

TEST(DetQTail, SlopeFromMedianScaling) {
  std::vector<fde::MalliavinMatrix> batch;
  for (double t : {0.25, 0.5, 1.0})
    for (int k = 1; k <= 5; ++k)
      batch.push_back(fde::make_malliavin_matrix(t, Eigen::MatrixXd::Identity(2, 2) * k * std::pow(t, 1.5)));
  const auto rep = fde::detQ_tail_report(batch);
  ASSERT_EQ(rep.per_time.size(), 3u);
  EXPECT_NEAR(rep.slope, 1.5, 1e-12);
  EXPECT_TRUE(rep.all_det_positive);
  EXPECT_EQ(rep.per_time[0].count, 5u);
  EXPECT_EQ(rep.per_time[0].det_quantiles.size(), rep.probabilities.size());
  EXPECT_THROW(fde::detQ_tail_report({}), fde::ValidationError);
}

}  // namespace
