#include <cmath>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "fde/fbm.hpp"
#include "fde/stats.hpp"

namespace {

using fde::UniformGrid;

double closed_form_cH(double H) { return std::sqrt(H * (2.0 * H - 1.0) / std::beta(2.0 - 2.0 * H, H - 0.5)); }

TEST(FbmCovariance, KnownValues) {
  EXPECT_DOUBLE_EQ(fde::covariance(1.0, 1.0, 0.75), 1.0);
  EXPECT_NEAR(fde::covariance(0.5, 1.0, 0.5), 0.5, 1e-15);
  EXPECT_THROW(fde::covariance(-1.0, 1.0, 0.7), fde::ValidationError);
  EXPECT_NEAR(fde::fgn_autocovariance(0, 0.7, 0.25), std::pow(0.25, 1.4), 1e-15);
}

TEST(HurstParams, NormalizationMatchesClosedForm) {
  for (double H : {0.55, 0.7, 0.75, 0.9}) {
    const fde::HurstParams hp(H);
    EXPECT_NEAR(hp.c_H(), closed_form_cH(H), 1e-6 * closed_form_cH(H)) << H;
  }
}

TEST(HurstParams, RejectsOutOfRange) {
  EXPECT_THROW(fde::HurstParams(0.5), fde::ValidationError);
  EXPECT_THROW(fde::HurstParams(1.0), fde::ValidationError);
  EXPECT_THROW(fde::HurstParams(0.7, 0.0), fde::ValidationError);
}

TEST(HurstParams, ReproducesCovariance) {
  const fde::HurstParams hp(0.7);
  const std::vector<std::pair<double, double>> pairs{{0.1, 0.3}, {0.25, 1.0}, {0.9, 0.95}, {0.6, 0.6}};
  EXPECT_LT(hp.reproduction_error(pairs), 1e-6);
}

TEST(KernelK, DerivativeMatchesFiniteDifference) {
  const fde::HurstParams hp(0.72);
  for (double t : {0.2, 0.5})
    for (double r : {0.6, 0.9}) {
      const double e = 1e-5;
      const double fd = (fde::kernel_K(r + e, t, hp) - fde::kernel_K(r - e, t, hp)) / (2.0 * e);
      EXPECT_NEAR(fde::kernel_dK(r, t, hp), fd, 1e-5 * std::abs(fd));
    }
}

TEST(KernelK, ArgumentChecks) {
  const fde::HurstParams hp(0.7);
  EXPECT_THROW(fde::kernel_K(1.0, 0.0, hp), fde::ValidationError);
  EXPECT_THROW(fde::kernel_K(0.5, 0.6, hp), fde::ValidationError);
  EXPECT_THROW(fde::kernel_dK(0.5, 0.6, hp), fde::ValidationError);
  EXPECT_GT(fde::kernel_K(1.0, 0.5, hp), 0.0);
}

TEST(KStar, IndicatorInnerProductIsCovariance) {
  const UniformGrid g(0.0, 1.0, 32);
  const fde::HurstParams hp(0.75);
  const auto ks = fde::build_kstar(g, hp);
  for (double s : {0.25, 0.5})
    for (double t : {0.5, 1.0}) {
      const double v = ks.inner(fde::indicator_cells(g, s), fde::indicator_cells(g, t));
      EXPECT_NEAR(v, fde::covariance(s, t, 0.75), 1e-5) << s << " " << t;
    }
}

TEST(KStar, GramMatchesIncrementCovariance) {
  const UniformGrid g(0.0, 1.0, 16);
  const double H = 0.65;
  const auto ks = fde::build_kstar(g, fde::HurstParams(H));
  const auto G = ks.gram();
  for (int j = 0; j < 16; j += 5)
    for (int k = j; k < 16; k += 3) {
      const double expect = fde::fgn_autocovariance(static_cast<std::size_t>(k - j), H, g.dt());
      EXPECT_NEAR(G(j, k), expect, 1e-4 * std::pow(g.dt(), 2 * H));
    }
  EXPECT_THROW(ks.apply(Eigen::VectorXd::Zero(3)), fde::ValidationError);
}

TEST(KStar, RequiresGridFromZero) {
  EXPECT_THROW(fde::build_kstar(UniformGrid(0.5, 1.0, 4), fde::HurstParams(0.7)), fde::ValidationError);
}

TEST(HInner, SumsOverComponents) {
  const UniformGrid g(0.0, 1.0, 8);
  const auto ks = fde::build_kstar(g, fde::HurstParams(0.8));
  Eigen::MatrixXd phi(8, 2);
  phi.col(0) = fde::indicator_cells(g, 1.0);
  phi.col(1) = fde::indicator_cells(g, 0.5);
  EXPECT_NEAR(fde::h_inner(phi, phi, ks), 1.0 + std::pow(0.5, 1.6), 1e-5);
  EXPECT_THROW(fde::h_inner(phi, Eigen::MatrixXd(8, 1), ks), fde::ValidationError);
}

class SamplerTest : public ::testing::TestWithParam<fde::FbmMethod> {};

TEST_P(SamplerTest, EmpiricalCovarianceMatches) {
  const UniformGrid g(0.0, 1.0, 64);
  const double H = 0.7;
  const fde::FbmSampler sampler(g, H, GetParam());
  const std::size_t N = 4000;
  double s11 = 0.0, s12 = 0.0, sm = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    const auto path = sampler.sample(1, 11, p).path;
    EXPECT_EQ(path(0), 0.0);
    s11 += path(64) * path(64);
    s12 += path(32) * path(64);
    sm += path(64);
  }
  const double tol = 4.0 * std::sqrt(2.0 / N);
  EXPECT_NEAR(s11 / N, 1.0, tol);
  EXPECT_NEAR(s12 / N, fde::covariance(0.5, 1.0, H), tol);
  EXPECT_NEAR(sm / N, 0.0, 4.0 / std::sqrt(double(N)));
}

TEST_P(SamplerTest, SameSeedSamePath) {
  const UniformGrid g(0.0, 2.0, 128);
  const auto a = fde::sample_fbm(g, 0.8, 2, 5, GetParam()).path;
  const auto b = fde::sample_fbm(g, 0.8, 2, 5, GetParam()).path;
  const auto c = fde::sample_fbm(g, 0.8, 2, 6, GetParam()).path;
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
}

INSTANTIATE_TEST_SUITE_P(Methods, SamplerTest, ::testing::Values(fde::FbmMethod::cholesky, fde::FbmMethod::circulant));

TEST(Sampler, DefaultMethodBySize) {
  EXPECT_EQ(fde::default_fbm_method(2048), fde::FbmMethod::cholesky);
  EXPECT_EQ(fde::default_fbm_method(4096), fde::FbmMethod::circulant);
}

TEST(Cholesky, ReportsIndefiniteMatrix) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(fde::cholesky_lower(a), fde::NumericalError);
  a << 4.0, 2.0, 2.0, 2.0;
  const auto L = fde::cholesky_lower(a);
  EXPECT_NEAR((L * L.transpose() - a).norm(), 0.0, 1e-14);
}

}  // namespace
