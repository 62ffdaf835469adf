#include <cmath>

#include <gtest/gtest.h>

#include "fde/fbm.hpp"
#include "fde/young.hpp"

namespace {

using fde::GridPath;
using fde::UniformGrid;

TEST(YoungIntegral, SmoothIntegrandAgainstIdentity) {
  const UniformGrid g(0.0, 1.0, 4096);
  const auto f = GridPath::from_function(g, [](double t) { return t; });
  const auto x = GridPath::from_function(g, [](double t) { return t; });
  const auto r = fde::young_integrate(f, x);
  EXPECT_NEAR(r.integral_path(g.n_steps()), 0.5, 2e-4);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_DOUBLE_EQ(r.integral_path(0), 0.0);
}

TEST(YoungIntegral, LevelDifferencesHalveForSmoothPaths) {
  const UniformGrid g(0.0, 1.0, 4096);
  const auto f = GridPath::from_function(g, [](double t) { return std::sin(t); });
  const auto x = GridPath::from_function(g, [](double t) { return t * t; });
  const auto r = fde::young_integrate(f, x);
  EXPECT_EQ(r.levels.size(), 13u);
  EXPECT_NEAR(r.rate_estimate, 1.0, 0.1);
}

TEST(YoungIntegral, WarnsWhenExponentsAreTooSmall) {
  const UniformGrid g(0.0, 1.0, 16);
  const auto f = GridPath::from_function(g, [](double t) { return t; });
  EXPECT_FALSE(fde::young_integrate(f, f, 0.4, 0.5).warnings.empty());
}

TEST(YoungIntegral, MatrixIntegrandAgainstVectorDriver) {
  const UniformGrid g(0.0, 1.0, 8);
  GridPath f(g, 4);  // 2 x 2 identity
  for (std::size_t i = 0; i < f.size(); ++i) {
    f(i, 0) = 1.0;
    f(i, 3) = 1.0;
  }
  GridPath x(g, 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x(i, 0) = g.node(i);
    x(i, 1) = -2.0 * g.node(i);
  }
  const auto r = fde::young_integrate(f, x).integral_path;
  EXPECT_NEAR(r(8, 0), 1.0, 1e-14);
  EXPECT_NEAR(r(8, 1), -2.0, 1e-14);
  EXPECT_THROW(fde::young_integrate(GridPath(g, 3), x), fde::ValidationError);
}

TEST(YoungIntegral, AprioriBoundHolds) {
  const UniformGrid g(0.0, 1.0, 1024);
  const auto f = fde::weierstrass_path(g, 0.7, 3.0, 12, 0.3);
  const auto x = fde::weierstrass_path(g, 0.7, 3.0, 12, 1.1);
  const auto J = fde::young_integrate(f, x).integral_path;
  for (std::size_t s : {0u, 100u, 500u})
    for (std::size_t t : {600u, 1024u}) {
      const double bound = fde::apriori_bound(f, x, 0.7, 0.7, s, t);
      const double lhs = std::abs(J(t) - J(s) - f(s) * (x(t) - x(s)));
      EXPECT_LE(lhs, bound) << s << " " << t;
    }
}

TEST(YoungIntegral, AprioriBoundRejectsSmallExponents) {
  EXPECT_THROW(fde::apriori_bound(1.0, 1.0, 1.0, 0.5, 0.5, 1.0), fde::ValidationError);
}

TEST(YoungIntegral, IntegrationByPartsForRoughPaths) {
  std::vector<double> res;
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const UniformGrid g(0.0, 1.0, n);
    const auto f = fde::weierstrass_path(g, 0.75, 3.0, 14, 0.2);
    const auto x = fde::weierstrass_path(g, 0.75, 3.0, 14, 0.9);
    res.push_back(fde::check_ibp(f, x));
  }
  EXPECT_LT(res[2], res[1]);
  EXPECT_LT(res[1], res[0]);
}

TEST(YoungIntegral, ChainRuleResidualShrinks) {
  const fde::ScalarMap sq{[](double y) { return y * y; }, [](double y) { return 2.0 * y; }};
  std::vector<double> res;
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const UniformGrid g(0.0, 1.0, n);
    const auto f = GridPath::from_function(g, [](double t) { return 1.0 + 0.5 * std::cos(t); });
    const auto x = fde::weierstrass_path(g, 0.8, 3.0, 14);
    res.push_back(fde::check_chain_rule(sq, f, x, 0.25));
  }
  EXPECT_LT(res[1], res[0]);
  EXPECT_LT(res[2], res[1]);

  const UniformGrid g(0.0, 1.0, 4096);
  const auto f = GridPath::from_function(g, [](double) { return 1.0; });
  const auto x = GridPath::from_function(g, [](double t) { return std::sin(t); });
  EXPECT_LT(fde::check_chain_rule(sq, f, x, 0.25), 1e-3);
}

TEST(YoungIntegral, FubiniForProductKernelMatchesClosedForm) {
  const UniformGrid g(0.0, 1.0, 512);
  const auto f = GridPath::from_function(g, [](double t) { return t; });
  const auto x = GridPath::from_function(g, [](double t) { return t; });
  const auto r = fde::check_fubini([](double a, double b) { return a * b; }, f, x);
  // int_0^1 int_0^r r u du dr = 1/8
  EXPECT_NEAR(r.lhs, 0.125, 5e-3);
  EXPECT_NEAR(r.rhs, 0.125, 5e-3);
}

TEST(YoungIntegral, FubiniResidualShrinksOnRoughPaths) {
  std::vector<double> res;
  for (std::size_t n : {64u, 256u, 1024u}) {
    const UniformGrid g(0.0, 1.0, n);
    const auto f = fde::weierstrass_path(g, 0.8, 3.0, 10, 0.4);
    const auto x = fde::weierstrass_path(g, 0.8, 3.0, 10, 1.3);
    res.push_back(fde::check_fubini([](double a, double b) { return std::cos(a - b); }, f, x).residual);
  }
  EXPECT_LT(res[2], res[0]);
}

TEST(WeierstrassPath, SeminormIsBounded) {
  const UniformGrid g(0.0, 1.0, 2048);
  const auto w = fde::weierstrass_path(g, 0.6);
  const double s6 = fde::holder_seminorm(w, 0.6).seminorm;
  EXPECT_LT(s6, 20.0);
  EXPECT_GT(fde::holder_seminorm(w, 0.9).seminorm, s6);
}

}  // namespace
