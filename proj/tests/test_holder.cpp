#include <cmath>

#include <gtest/gtest.h>

#include "fde/holder.hpp"
#include "fde/rng.hpp"

namespace {

using fde::GridPath;
using fde::UniformGrid;

GridPath random_walk(std::size_t n, std::uint64_t seed, std::size_t dim = 1) {
  GridPath f(UniformGrid(0.0, 1.0, n), dim);
  for (std::size_t c = 0; c < dim; ++c) {
    fde::CounterRng rng(seed, 0, c);
    for (std::size_t i = 1; i < f.size(); ++i) f(i, c) = f(i - 1, c) + rng.normal();
  }
  return f;
}

TEST(Grid, NodesAndValidation) {
  const UniformGrid g(0.0, 1.0, 4);
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_DOUBLE_EQ(g.node(3), 0.75);
  EXPECT_EQ(g.index_of(0.5), 2u);
  EXPECT_THROW(UniformGrid(1.0, 1.0, 4), fde::ValidationError);
  EXPECT_THROW(UniformGrid(0.0, 1.0, 0), fde::ValidationError);
  EXPECT_THROW((void)g.index_of(0.3), fde::ValidationError);
  EXPECT_TRUE(UniformGrid(0.0, 1.0, 64).is_dyadic_to(6));
  EXPECT_FALSE(UniformGrid(0.0, 1.0, 96).is_dyadic_to(6));
}

TEST(Delta1, ConstantPathHasZeroIncrements) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 8), [](double) { return 3.0; });
  const auto d = fde::delta1(f);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < f.size(); ++j) EXPECT_EQ(d(i, j), 0.0);
}

TEST(Delta1, IdentityPathIncrement) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 4), [](double t) { return t; });
  EXPECT_DOUBLE_EQ(fde::delta1(f)(0, 4), 1.0);
}

TEST(Delta1, SquarePathIncrement) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 4), [](double t) { return t * t; });
  EXPECT_NEAR(fde::delta1(f)(1, 3), 0.5, 1e-15);
}

TEST(Delta2, VanishesOnExactIncrements) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 32), [](double t) { return t * t * t; });
  EXPECT_LE(fde::delta2(fde::delta1(f)).max_abs(), 1e-15);
  const auto w = random_walk(64, 3, 2);
  EXPECT_LE(fde::delta2(fde::delta1(w)).max_abs(), 1e-10 * w.scale());
}

TEST(Delta2, TableAndFunctionGermsAgree) {
  const UniformGrid g(0.0, 1.0, 24);
  const auto w = random_walk(24, 7, 2);
  std::vector<double> table(25 * 25 * 2);
  auto germ = [&](std::size_t i, std::size_t j, std::size_t c) { return (w(j, c) - w(i, c)) * (1.0 + w(i, 1 - c)); };
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 25; ++j)
      for (std::size_t c = 0; c < 2; ++c) table[(i * 25 + j) * 2 + c] = i == j ? 0.0 : germ(i, j, c);
  const double a = fde::delta2(fde::Increment2::from_table(g, 2, table)).max_abs();
  const double b = fde::delta2(fde::Increment2(g, 2, germ)).max_abs();
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, b, 1e-14 * b);
}

TEST(Delta2, ProductGermHandValue) {
  const UniformGrid g(0.0, 1.0, 2);
  const auto f = GridPath::from_function(g, [](double t) { return t; });
  const fde::Increment2 h(g, 1, [&](std::size_t i, std::size_t j, std::size_t) {
    return (f(j) - f(i)) * (f(j) - f(i));
  });
  EXPECT_NEAR(fde::delta2(h)(0, 1, 2), 0.5, 1e-15);
}

TEST(HolderSeminorm, ConstantIsZero) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 16), [](double) { return -2.0; });
  EXPECT_EQ(fde::holder_seminorm(f, 0.5).seminorm, 0.0);
}

TEST(HolderSeminorm, IdentityAtHalf) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 64), [](double t) { return t; });
  const auto r = fde::holder_seminorm(f, 0.5);
  EXPECT_NEAR(r.seminorm, 1.0, 1e-12);
  EXPECT_EQ(r.argmax_pair.first, 0u);
  EXPECT_EQ(r.argmax_pair.second, 64u);
}

TEST(HolderSeminorm, SquareRootAttainsOneAtFirstStep) {
  const auto f = GridPath::from_function(UniformGrid(0.0, 1.0, 1024), [](double t) { return std::sqrt(t); });
  const auto r = fde::holder_seminorm(f, 0.5);
  EXPECT_NEAR(r.seminorm, 1.0, 1e-12);
  EXPECT_EQ(r.argmax_pair.first, 0u);
}

TEST(HolderSeminorm, RejectsEmptyIntervalAndBadExponent) {
  const auto f = random_walk(16, 1);
  EXPECT_THROW(fde::holder_seminorm(f, 0.5, 3, 3), fde::ValidationError);
  EXPECT_THROW(fde::holder_seminorm(f, 0.0), fde::ValidationError);
  EXPECT_THROW(fde::holder_seminorm(f, 1.5), fde::ValidationError);
}

TEST(HolderSeminorm, MonotoneInInterval) {
  const auto f = random_walk(128, 9);
  double prev = 0.0;
  for (std::size_t i1 = 8; i1 <= 128; i1 += 8) {
    const double v = fde::holder_seminorm(f, 0.6, 0, i1).seminorm;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(HolderSeminorm, ExponentComparisonOnUnitInterval) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = random_walk(256, seed);
    for (double mu : {0.6, 0.8, 1.0})
      for (double nu : {0.3, 0.5}) {
        EXPECT_GE(fde::holder_seminorm(f, mu).seminorm * (1.0 + 1e-12), fde::holder_seminorm(f, nu).seminorm);
      }
  }
}

TEST(HolderSeminorm, WindowedScanIsALowerEstimate) {
  const auto f = random_walk(256, 4);
  fde::SeminormOptions o;
  o.pair_window = 16;
  EXPECT_LE(fde::holder_seminorm(f, 0.7, o).seminorm, fde::holder_seminorm(f, 0.7).seminorm);
}

TEST(Sewing, ExactIncrementIsUnchangedAtEveryLevel) {
  const UniformGrid g(0.0, 1.0, 64);
  const auto f = GridPath::from_function(g, [](double t) { return std::sin(3.0 * t); });
  const auto res = fde::sewing(fde::delta1(f), 1.5, 6);
  for (const auto& v : res.level_values) EXPECT_NEAR(v(0), f(64) - f(0), 1e-14);
  EXPECT_LE(res.delta_norm, 1e-13);
  for (std::size_t i = 0; i < res.integral.size(); ++i) EXPECT_NEAR(res.integral(i), f(i) - f(0), 1e-14);
}

TEST(Sewing, RiemannGermConvergesToTwoThirds) {
  const UniformGrid g(0.0, 1.0, 1024);
  const fde::Increment2 germ(g, 1, [&](std::size_t i, std::size_t j, std::size_t) {
    const double s = g.node(i), t = g.node(j);
    return s * (t * t - s * s);
  });
  const auto res = fde::sewing(germ, 2.0, 10);
  EXPECT_NEAR(res.level_values.back()(0), 2.0 / 3.0, 2e-3);
  for (std::size_t k = 0; k < res.level_values.size(); ++k)
    EXPECT_LE(std::abs(res.level_values.back()(0) - res.level_values[k](0)), res.tail_bound(k) + 1e-12);
  for (std::size_t k = 1; k + 1 < res.level_values.size(); ++k) {
    const double a = std::abs(res.level_values[k + 1](0) - res.level_values[k](0));
    const double b = std::abs(res.level_values[k](0) - res.level_values[k - 1](0));
    EXPECT_LT(a, b);
  }
}

TEST(Sewing, SmoothRiemannGermMatchesIntegral) {
  const UniformGrid g(0.0, 1.0, 512);
  const auto f = GridPath::from_function(g, [](double t) { return std::cos(t); });
  const auto x = GridPath::from_function(g, [](double t) { return t * t; });
  const fde::Increment2 germ(g, 1, [&](std::size_t i, std::size_t j, std::size_t) { return f(i) * (x(j) - x(i)); });
  const auto res = fde::sewing(germ, 2.0, 9);
  const double exact = 2.0 * (std::cos(1.0) + std::sin(1.0) - 1.0);  // int_0^1 2t cos t dt
  EXPECT_NEAR(res.level_values.back()(0), exact, 5e-3);
}

TEST(Sewing, TelescopingCorrectionVanishesUnderRefinement) {
  const UniformGrid g(0.0, 1.0, 1024);
  const auto f = GridPath::from_function(g, [](double t) { return std::exp(t); });
  const fde::Increment2 germ(g, 1, [&](std::size_t i, std::size_t j, std::size_t) {
    return f(i) * (g.node(j) - g.node(i));
  });
  double prev = 1e300;
  for (std::size_t level = 4; level <= 10; level += 2) {
    const auto res = fde::sewing(germ, 2.0, level);
    const auto& I = res.integral;
    const std::size_t mid = I.size() / 2;
    const double corr = std::abs((I(I.size() - 1) - I(0)) - (I(mid) - I(0)) - (I(I.size() - 1) - I(mid)));
    EXPECT_LE(corr, 1e-12);
    const double err = std::abs(res.level_values.back()(0) - (std::exp(1.0) - 1.0));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Sewing, RejectsBadExponentAndNonDyadicGrid) {
  const UniformGrid g(0.0, 1.0, 96);
  const auto f = GridPath::from_function(g, [](double t) { return t; });
  EXPECT_THROW(fde::sewing(fde::delta1(f), 1.0, 3), fde::ValidationError);
  EXPECT_THROW(fde::sewing(fde::delta1(f), 1.5, 6), fde::ValidationError);
  EXPECT_NO_THROW(fde::sewing(fde::delta1(f), 1.5, 5));
}

TEST(Sewing, ConstantValue) { EXPECT_NEAR(fde::sewing_constant(1.5), 1.0 / (std::pow(2.0, 1.5) - 2.0), 1e-15); }

}  // namespace
