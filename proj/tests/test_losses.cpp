#include "oracles.hpp"
#include "pram/losses.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace {

using pram::Dataset;
using pram::LossFamily;
using pram::LossSpec;
using pram::Vector;
using pram::WeightKind;
using pram::WeightSpec;

constexpr std::array kRobust{LossFamily::Huber, LossFamily::Tukey, LossFamily::Cauchy};
constexpr std::array kAll{LossFamily::Huber, LossFamily::Tukey, LossFamily::Cauchy, LossFamily::Quadratic};

TEST(LossValue, WorkedExamples) {
  EXPECT_DOUBLE_EQ(pram::loss_value({LossFamily::Huber, 1.0}, 0.5), 0.125);
  EXPECT_DOUBLE_EQ(pram::loss_value({LossFamily::Huber, 1.0}, 2.0), 1.5);
  EXPECT_NEAR(pram::loss_value({LossFamily::Tukey, 1.0}, 2.0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(pram::loss_value({LossFamily::Cauchy, 1.0}, 1.0), 0.5 * std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(pram::loss_value({LossFamily::Quadratic, 0.0}, 3.0), 4.5);
}

TEST(LossValue, TukeyInteriorMatchesClosedForm) {
  const double a = 2.0;
  for (double u : {-1.9, -0.3, 0.0, 0.7, 1.99}) {
    const double x = 1.0 - (u / a) * (u / a);
    EXPECT_NEAR(pram::loss_value({LossFamily::Tukey, a}, u), a * a / 6.0 * (1.0 - x * x * x), 1e-14);
  }
}

TEST(LossValue, RejectsBadArguments) {
  EXPECT_THROW(pram::loss_value({LossFamily::Huber, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(pram::loss_value({LossFamily::Cauchy, -1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(pram::loss_value({LossFamily::Tukey, 1.0}, std::numeric_limits<double>::quiet_NaN()),
               std::invalid_argument);
  EXPECT_THROW(pram::loss_deriv({LossFamily::Huber, 1.0}, std::numeric_limits<double>::infinity()),
               std::invalid_argument);
  EXPECT_NO_THROW(pram::loss_value({LossFamily::Quadratic, 0.0}, 1.0));
}

TEST(LossDeriv, WorkedExamples) {
  EXPECT_DOUBLE_EQ(pram::loss_deriv({LossFamily::Huber, 1.0}, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(pram::loss_deriv({LossFamily::Tukey, 1.0}, 0.5), 0.28125);
  EXPECT_DOUBLE_EQ(pram::loss_deriv({LossFamily::Cauchy, 1.0}, 3.0), 0.3);
  EXPECT_DOUBLE_EQ(pram::loss_deriv({LossFamily::Quadratic, 0.0}, -2.5), -2.5);
}

TEST(LossSecondDeriv, WorkedExamplesAndKinkConvention) {
  EXPECT_DOUBLE_EQ(pram::loss_second_deriv({LossFamily::Cauchy, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(pram::loss_second_deriv({LossFamily::Huber, 1.0}, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(pram::loss_second_deriv({LossFamily::Tukey, 2.0}, 1.0), -0.1875);
  for (auto f : kAll) EXPECT_DOUBLE_EQ(pram::loss_second_deriv({f, 1.5}, 0.0), 1.0);
  // |u| == alpha: interior branch.
  EXPECT_DOUBLE_EQ(pram::loss_second_deriv({LossFamily::Huber, 1.0}, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(pram::loss_second_deriv({LossFamily::Tukey, 1.0}, -1.0), 0.0);
}

TEST(LossSecondDeriv, MatchesFiniteDifferenceOfDerivative) {
  const double h = 1e-6;
  for (auto f : kAll)
    for (double u : {-3.1, -0.4, 0.2, 0.9, 2.7}) {
      const LossSpec s{f, 1.3};
      const double fd = (pram::loss_deriv(s, u + h) - pram::loss_deriv(s, u - h)) / (2 * h);
      EXPECT_NEAR(pram::loss_second_deriv(s, u), fd, 1e-6) << static_cast<int>(f) << " u=" << u;
    }
}

TEST(LossProperties, DerivativeBoundsAndLipschitz) {
  for (double a : {0.3, 1.0, 7.5}) {
    double max_t = 0.0, max_c = 0.0, max_h = 0.0;
    for (int k = -200000; k <= 200000; ++k) {
      const double u = k * (10.0 * a / 200000.0);
      max_h = std::max(max_h, std::abs(pram::loss_deriv({LossFamily::Huber, a}, u)));
      max_t = std::max(max_t, std::abs(pram::loss_deriv({LossFamily::Tukey, a}, u)));
      max_c = std::max(max_c, std::abs(pram::loss_deriv({LossFamily::Cauchy, a}, u)));
    }
    EXPECT_LE(max_h, a * (1 + 1e-15));
    EXPECT_LE(max_t, 16.0 * a / (25.0 * std::sqrt(5.0)) * (1 + 1e-12));
    EXPECT_GT(max_t, 16.0 * a / (25.0 * std::sqrt(5.0)) * (1 - 1e-6));
    EXPECT_LE(max_c, a / 2.0 * (1 + 1e-12));
  }
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (auto f : kRobust)
    for (int k = 0; k < 20000; ++k) {
      const double a = unif(rng), b = unif(rng);
      const LossSpec s{f, 2.0};
      EXPECT_LE(std::abs(pram::loss_deriv(s, a) - pram::loss_deriv(s, b)), std::abs(a - b) * (1 + 1e-12) + 1e-15);
    }
}

TEST(LossProperties, MajorizationSymmetryAndApproximation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-20.0, 20.0);
  std::uniform_real_distribution<double> alpha(0.05, 30.0);
  for (auto f : kAll)
    for (int k = 0; k < 5000; ++k) {
      const double u = unif(rng);
      const LossSpec s{f, alpha(rng)};
      EXPECT_LE(pram::loss_value(s, u), 0.5 * u * u * (1 + 1e-15));
      EXPECT_EQ(pram::loss_value(s, u), pram::loss_value(s, -u));
      EXPECT_EQ(pram::loss_deriv(s, u), -pram::loss_deriv(s, -u));
      EXPECT_GE(pram::loss_value(s, u), 0.0);
    }
  for (auto f : kRobust) {
    EXPECT_EQ(pram::loss_value({f, 1.0}, 0.0), 0.0);
    for (double u : {0.1, 1.0, 10.0, -4.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double m = 1.0; m <= 1e7; m *= 1.7) {
        const double gap = std::abs(pram::loss_value({f, m * std::abs(u)}, u) - 0.5 * u * u);
        EXPECT_LE(gap, prev);
        prev = gap;
      }
      EXPECT_LT(prev, 1e-8 * u * u);
    }
  }
}

TEST(WeightEval, WorkedExamples) {
  Vector x(3);
  x << 1.0, -8.0, 2.0;
  const auto u = pram::weight_eval({}, x);
  EXPECT_EQ(u.w, 1.0);
  EXPECT_EQ(u.v, 1.0);
  const auto c = pram::weight_eval({WeightKind::InfinityCap, 4.0}, x);
  EXPECT_DOUBLE_EQ(c.w, 0.5);
  EXPECT_EQ(c.v, 1.0);
  Vector small(2);
  small << 2.0, -1.0;
  EXPECT_EQ(pram::weight_eval({WeightKind::InfinityCap, 4.0}, small).w, 1.0);
  EXPECT_EQ(pram::weight_eval({WeightKind::InfinityCap, 4.0}, Vector::Zero(3)).w, 1.0);
  EXPECT_THROW(pram::weight_eval({WeightKind::InfinityCap, 0.0}, x), std::invalid_argument);
}

TEST(EmpiricalLoss, WorkedExamples) {
  Dataset one(pram::Matrix::Ones(1, 1), Vector::Constant(1, 2.0));
  EXPECT_EQ(pram::empirical_loss(one, Vector::Constant(1, 2.0), {LossFamily::Quadratic, 0.0}, {}), 0.0);

  pram::Matrix x(2, 1);
  x << 1.0, 1.0;
  Vector y(2);
  y << 0.5, 2.0;
  Dataset two(x, y);
  EXPECT_DOUBLE_EQ(pram::empirical_loss(two, Vector::Zero(1), {LossFamily::Huber, 1.0}, {}), 0.8125);

  std::mt19937_64 rng(3);
  const auto xm = pram::oracle::gaussian_matrix(rng, 12, 4);
  const auto beta = pram::oracle::gaussian_vector(rng, 4);
  Dataset exact(xm, xm * beta);
  for (auto f : kAll) EXPECT_NEAR(pram::empirical_loss(exact, beta, {f, 0.7}, {}), 0.0, 1e-28);

  EXPECT_THROW(pram::empirical_loss(two, Vector::Zero(2), {LossFamily::Huber, 1.0}, {}), std::invalid_argument);
}

TEST(EmpiricalGradient, ZeroResidualsAndLeastSquares) {
  std::mt19937_64 rng(4);
  const auto x = pram::oracle::gaussian_matrix(rng, 15, 5);
  const auto beta = pram::oracle::gaussian_vector(rng, 5);
  Dataset exact(x, x * beta);
  for (auto f : kAll) EXPECT_LT(pram::empirical_gradient(exact, beta, {f, 1.0}, {}).lpNorm<Eigen::Infinity>(), 1e-14);

  const Vector y = pram::oracle::gaussian_vector(rng, 15);
  Dataset d(x, y);
  const Vector g = pram::empirical_gradient(d, beta, {LossFamily::Quadratic, 0.0}, {});
  const Vector ls = -x.transpose() * (y - x * beta) / 15.0;
  EXPECT_LT((g - ls).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_THROW(pram::empirical_gradient(d, Vector::Zero(4), {LossFamily::Huber, 1.0}, {}), std::invalid_argument);
}

TEST(EmpiricalGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  const auto x = pram::oracle::gaussian_matrix(rng, 5, 3);
  const auto y = pram::oracle::gaussian_vector(rng, 5, 3.0);
  Dataset d(x, y);
  const Vector beta = pram::oracle::gaussian_vector(rng, 3);
  const LossSpec cauchy{LossFamily::Cauchy, 2.0};
  const Vector g = pram::empirical_gradient(d, beta, cauchy, {});
  const Vector fd =
      pram::oracle::fd_gradient([&](const Vector& b) { return pram::empirical_loss(d, b, cauchy, {}); }, beta);
  EXPECT_LE((g - fd).norm() / g.norm(), 1e-6);

  // Weighted, every family, several points.
  const auto xw = pram::oracle::gaussian_matrix(rng, 40, 6) * 3.0;
  const auto yw = pram::oracle::gaussian_vector(rng, 40, 4.0);
  Dataset dw(xw, yw);
  for (auto f : kAll)
    for (int k = 0; k < 5; ++k) {
      const Vector b = pram::oracle::gaussian_vector(rng, 6, 0.3);
      const LossSpec s{f, 3.3};
      const WeightSpec ws{WeightKind::InfinityCap, 4.0};
      const Vector ga = pram::empirical_gradient(dw, b, s, ws);
      const Vector gf =
          pram::oracle::fd_gradient([&](const Vector& bb) { return pram::empirical_loss(dw, bb, s, ws); }, b);
      EXPECT_LE((ga - gf).norm() / std::max(1e-12, ga.norm()), 1e-5);
    }
}

TEST(WeightedLoss, WeightsEnterAsDocumented) {
  pram::Matrix x(2, 2);
  x << 8.0, 0.0, 1.0, 1.0;
  Vector y(2);
  y << 4.0, 1.0;
  Dataset d(x, y);
  const WeightSpec ws{WeightKind::InfinityCap, 4.0};
  const LossSpec s{LossFamily::Huber, 1.0};
  // rows: w = 0.5 and 1, residuals 4 and 1 at beta = 0.
  const double expected = (0.5 * pram::loss_value(s, 4.0) + pram::loss_value(s, 1.0)) / 2.0;
  EXPECT_DOUBLE_EQ(pram::empirical_loss(d, Vector::Zero(2), s, ws), expected);
}

}  // namespace
