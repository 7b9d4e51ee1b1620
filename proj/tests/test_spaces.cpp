#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nitreg/errors.hpp"
#include "nitreg/spaces.hpp"
#include "test_support.hpp"

using namespace nitreg;
using nitreg::testing::random_fn;

TEST(GridSpace, TrapezoidalWeights1D) {
  auto sp = GridSpaced::interval(400);
  const auto& w = sp->weights();
  EXPECT_EQ(sp->node_count(), 401);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(w(0), 0.5 / 400);
  EXPECT_DOUBLE_EQ(w(400), 0.5 / 400);
  for (int k = 1; k < 400; ++k) EXPECT_DOUBLE_EQ(w(k), 1.0 / 400);
}

TEST(GridSpace, TensorWeights2D) {
  auto sp = GridSpaced::unit_square(40, 30);
  const auto& w = sp->weights();
  EXPECT_EQ(sp->node_count(), 41 * 31);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_TRUE((w.array() > 0).all());
  const double hx = 1.0 / 40, hy = 1.0 / 30;
  EXPECT_DOUBLE_EQ(w(sp->index(0, 0)), hx * hy / 4);
  EXPECT_DOUBLE_EQ(w(sp->index(5, 0)), hx * hy / 2);
  EXPECT_DOUBLE_EQ(w(sp->index(5, 7)), hx * hy);
}

TEST(GridSpace, RejectsBadExponent) {
  EXPECT_THROW(GridSpaced::interval(10, 1.0), ParameterError);
  EXPECT_THROW(GridSpaced::interval(10, 0.5), ParameterError);
}

TEST(Norm, Examples) {
  auto sp = GridSpaced::interval(400);
  EXPECT_NEAR(norm(GridFnd::constant(sp, 1.0)), 1.0, 1e-14);
  EXPECT_EQ(norm(GridFnd::zeros(sp)), 0.0);
  auto t = GridFnd::sample(sp, [](double s) { return s; });
  EXPECT_NEAR(norm(t), 1.0 / std::sqrt(3.0), 1e-4);
}

TEST(Norm, DualUsesConjugateExponent) {
  auto sp = GridSpaced::interval(50, 3.0);
  std::mt19937_64 rng(1);
  auto f = random_fn(sp, rng);
  const double q = 1.5;
  double acc = 0.0;
  for (int k = 0; k < f.size(); ++k) acc += sp->weights()(k) * std::pow(std::abs(f[k]), q);
  EXPECT_NEAR(norm(f.retagged(Variance::Dual)), std::pow(acc, 1.0 / q), 1e-13);
}

TEST(Norm, NonFiniteRejected) {
  auto sp = GridSpaced::interval(10);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(11);
  v(3) = std::nan("");
  EXPECT_THROW(norm(GridFnd(sp, v)), InvalidValueError);
  v(3) = INFINITY;
  EXPECT_THROW(norm(GridFnd(sp, v)), InvalidValueError);
}

TEST(Pairing, Examples) {
  auto sp = GridSpaced::interval(400);
  auto one = GridFnd::constant(sp, 1.0);
  EXPECT_NEAR(pairing(one.retagged(Variance::Dual), one), 1.0, 1e-14);
  EXPECT_EQ(pairing(GridFnd::zeros(sp, Variance::Dual), one), 0.0);
}

TEST(Pairing, MatchesBruteForceSum) {
  auto sp = GridSpaced::unit_square(12, 9);
  std::mt19937_64 rng(2);
  auto xi = random_fn(sp, rng, Variance::Dual);
  auto x = random_fn(sp, rng);
  long double acc = 0;
  for (int k = 0; k < x.size(); ++k) acc += static_cast<long double>(sp->weights()(k)) * xi[k] * x[k];
  EXPECT_NEAR(pairing(xi, x), static_cast<double>(acc), 1e-14);
}

TEST(Pairing, MismatchedSpaces) {
  auto a = GridFnd::constant(GridSpaced::interval(10), 1.0, Variance::Dual);
  auto b = GridFnd::constant(GridSpaced::interval(11), 1.0);
  EXPECT_THROW(pairing(a, b), DimensionError);
}

TEST(DualityMap, HilbertCaseIsIdentity) {
  auto sp = GridSpaced::interval(64);
  std::mt19937_64 rng(3);
  auto f = random_fn(sp, rng);
  auto j = duality_map(f, 2.0);
  EXPECT_TRUE(j.is_dual());
  EXPECT_LT((j.values() - f.values()).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(DualityMap, ZeroMapsToZero) {
  auto sp = GridSpaced::interval(20, 3.0);
  for (double r : {1.5, 2.0, 4.0}) {
    auto j = duality_map(GridFnd::zeros(sp), r);
    EXPECT_EQ(j.values().norm(), 0.0);
    EXPECT_TRUE(j.is_dual());
  }
}

TEST(DualityMap, GaugeFour) {
  auto sp = GridSpaced::interval(64);
  std::mt19937_64 rng(4);
  auto f = random_fn(sp, rng);
  f = scale(2.0 / norm(f), f);
  auto j = duality_map(f, 4.0);
  EXPECT_LT((j.values() - 4.0 * f.values()).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_NEAR(pairing(j, f), 16.0, 1e-12);
}

TEST(DualityMap, RejectsGaugeAtMostOne) {
  auto f = GridFnd::constant(GridSpaced::interval(5), 1.0);
  EXPECT_THROW(duality_map(f, 1.0), ParameterError);
  EXPECT_THROW(bregman_norm(f, f, 0.5), ParameterError);
}

TEST(DualityMap, IdentitiesOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (double p : {2.0, 1.5, 3.0}) {
    auto sp = GridSpaced::interval(80, p);
    for (double r : {2.0, 1.5, 3.0}) {
      for (int t = 0; t < 25; ++t) {
        auto f = scale(std::exp(std::normal_distribution<double>(0, 1)(rng)), random_fn(sp, rng));
        double nf = norm(f);
        auto j = duality_map(f, r);
        EXPECT_LE(std::abs(norm(j) - std::pow(nf, r - 1)), 1e-10 * (1 + std::pow(nf, r - 1)));
        EXPECT_LE(std::abs(pairing(j, f) - std::pow(nf, r)), 1e-10 * (1 + std::pow(nf, r)));
      }
    }
  }
}

TEST(BregmanNorm, Examples) {
  std::mt19937_64 rng(6);
  auto sp = GridSpaced::interval(40);
  auto f = random_fn(sp, rng), g = random_fn(sp, rng);
  EXPECT_NEAR(bregman_norm(f, f, 3.0), 0.0, 1e-13);
  EXPECT_NEAR(bregman_norm(g, f, 2.0), 0.5 * std::pow(norm(g - f), 2), 1e-12);
}

TEST(BregmanNorm, TermByTerm) {
  std::mt19937_64 rng(7);
  auto sp = GridSpaced::interval(40, 1.5);
  auto f = random_fn(sp, rng), g = random_fn(sp, rng);
  const double r = 3.0;
  // Independent evaluation of J_r(f) from its definition.
  const auto& w = sp->weights();
  double nf = 0.0;
  for (int k = 0; k < f.size(); ++k) nf += w(k) * std::pow(std::abs(f[k]), 1.5);
  nf = std::pow(nf, 1 / 1.5);
  double ng = 0.0;
  for (int k = 0; k < g.size(); ++k) ng += w(k) * std::pow(std::abs(g[k]), 1.5);
  ng = std::pow(ng, 1 / 1.5);
  double pj = 0.0;
  for (int k = 0; k < f.size(); ++k) {
    double jk = std::pow(nf, r - 1.5) * std::pow(std::abs(f[k]), 0.5) * (f[k] > 0 ? 1 : -1);
    pj += w(k) * jk * (g[k] - f[k]);
  }
  double expect = std::pow(ng, r) / r - std::pow(nf, r) / r - pj;
  EXPECT_GE(bregman_norm(g, f, r), 0.0);
  EXPECT_NEAR(bregman_norm(g, f, r), expect, 1e-12 * (1 + std::abs(expect)));
}

TEST(BregmanNorm, PositiveAwayFromDiagonal) {
  std::mt19937_64 rng(8);
  for (double p : {1.5, 2.0, 3.0}) {
    auto sp = GridSpaced::interval(30, p);
    for (double r : {1.5, 2.0, 3.0}) {
      for (int t = 0; t < 10; ++t) {
        auto f = random_fn(sp, rng), h = random_fn(sp, rng);
        auto g = axpy(1e-3 / norm(h), h, f);
        EXPECT_GE(bregman_norm(g, f, r), 1e-12);
      }
    }
  }
}

TEST(BregmanNorm, ThreePointIdentity) {
  std::mt19937_64 rng(9);
  for (double p : {2.0, 1.5, 3.0}) {
    auto sp = GridSpaced::interval(50, p);
    for (double r : {2.0, 1.5, 3.0}) {
      for (int t = 0; t < 10; ++t) {
        auto x = random_fn(sp, rng), x1 = random_fn(sp, rng), x2 = random_fn(sp, rng);
        double lhs = bregman_norm(x2, x, r) - bregman_norm(x1, x, r);
        double rhs = bregman_norm(x2, x1, r) + pairing(duality_map(x1, r) - duality_map(x, r), x2 - x1);
        double s = 1 + std::abs(bregman_norm(x2, x, r)) + std::abs(bregman_norm(x1, x, r));
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * s);
      }
    }
  }
}

TEST(Arithmetic, Trivial) {
  std::mt19937_64 rng(10);
  auto sp = GridSpaced::interval(20);
  auto f = random_fn(sp, rng), g = random_fn(sp, rng);
  EXPECT_EQ(lincomb({1.0, 0.0}, {f, g}).values(), f.values());
  EXPECT_EQ(scale(0.0, f).values().norm(), 0.0);
  EXPECT_EQ((f + g - g).values().isApprox(f.values(), 1e-15), true);
}

TEST(Arithmetic, Associativity) {
  std::mt19937_64 rng(11);
  auto sp = GridSpaced::unit_square(6, 6);
  for (int t = 0; t < 20; ++t) {
    auto a = random_fn(sp, rng), b = random_fn(sp, rng), c = random_fn(sp, rng);
    auto l = (a + b) + c, r = a + (b + c);
    EXPECT_LE((l.values() - r.values()).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}

TEST(Arithmetic, PreservesVarianceAndRejectsMixed) {
  auto sp = GridSpaced::interval(5);
  auto p = GridFnd::constant(sp, 1.0);
  auto d = GridFnd::constant(sp, 1.0, Variance::Dual);
  EXPECT_TRUE((d + d).is_dual());
  EXPECT_TRUE(scale(2.0, d).is_dual());
  EXPECT_FALSE(axpy(2.0, p, p).is_dual());
  EXPECT_THROW(p + d, ParameterError);
  EXPECT_THROW(axpy(1.0, p, d), ParameterError);
  EXPECT_THROW(lincomb({1.0, 1.0}, {p, d}), ParameterError);
}

TEST(GridFn, LengthMustMatchSpace) {
  auto sp = GridSpaced::interval(5);
  EXPECT_THROW(GridFnd(sp, Eigen::VectorXd::Zero(5)), DimensionError);
}

TEST(GridFn, TemplatedOnScalar) {
  auto sp = GridSpace<float>::interval(100);
  auto f = GridFn<float>::constant(sp, 1.0f);
  EXPECT_NEAR(norm(f), 1.0f, 1e-5f);
  auto sl = GridSpace<long double>::interval(100);
  auto g = GridFn<long double>::sample(sl, [](long double s) { return s; });
  EXPECT_NEAR(static_cast<double>(norm(g)), 1.0 / std::sqrt(3.0), 1e-4);
}
