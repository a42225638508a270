#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <plgrowth/bounds.hpp>

using namespace plgrowth;

TEST(LogBarrier, Values) {
  const LogBarrier b(1.0, 1.0);
  EXPECT_EQ(barrier_eval(b, 0.0), 0.0);
  EXPECT_NEAR(barrier_eval(b, 1.0), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(barrier_eval(b, -2.0), -0.6931471805599453, 1e-15);
  EXPECT_THROW(barrier_eval(b, 1.0 + 1e-9), std::domain_error);
}

TEST(LogBarrier, Derivatives) {
  const LogBarrier b(1.0, 1.0);
  auto [d1, d2] = barrier_derivatives(b, 0.0);
  EXPECT_DOUBLE_EQ(d1, 0.5);
  EXPECT_DOUBLE_EQ(d2, 0.25);
  std::tie(d1, d2) = barrier_derivatives(b, 1.0);
  EXPECT_EQ(d1, 1.0);
  EXPECT_EQ(d1, b.sup_derivative());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int k = 0; k < 200; ++k) {
    const LogBarrier c(U(rng), std::exp(U(rng)));
    const double t = c.M4r() - std::abs(U(rng));
    const auto [e1, e2] = c.derivatives(t);
    EXPECT_NEAR(e2 - e1 * e1, 0.0, 1e-12 * e2);
  }
  EXPECT_THROW(LogBarrier(1.0, 0.0), std::invalid_argument);
}

TEST(CheckConditions, LogBarrierPasses) {
  const auto rep = check_conditions(LogBarrier(1.0, 1.0), -3.0, 1.0, 1000);
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.c2_ratio_max, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(rep.c4_sup_derivative, 1.0);
  EXPECT_DOUBLE_EQ(rep.c3_min_derivative, 0.2);
}

TEST(CheckConditions, SquareFailsNearOne) {
  // φ = t²: φ'²/φ'' = 2t² > 1 on (0.8, 1).
  const auto rep = check_conditions([](double t) { return std::pair{2 * t, 2.0}; }, 0.8, 1.0, 100);
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.c2_ratio_max, 2.0, 1e-12);
}

TEST(CheckConditions, LinearFails) {
  const auto rep = check_conditions([](double) { return std::pair{1.0, 0.0}; }, 0.0, 1.0);
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(std::isinf(rep.c2_ratio_max));
}

TEST(CheckConditions, Errors) {
  EXPECT_THROW(check_conditions(LogBarrier(1, 1), 0.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(check_conditions(LogBarrier(1, 1), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(check_conditions([](double) { return std::pair{NAN, 1.0}; }, 0.0, 1.0), std::domain_error);
}

TEST(Theta, ClosedForm) {
  EXPECT_NEAR(theta({2, 0.25, 1.0}), 0.39346934028736658, 1e-15);
  EXPECT_NEAR(theta({2, 0.5, 1.0}), 0.50693130860476021, 1e-15);
  EXPECT_LT(theta({2, 1e-12, 1.0}), 1e-5);
  EXPECT_THROW(theta({2, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(theta({1, 0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(theta({2, 0.5, -1.0}), std::invalid_argument);
}

TEST(Alpha, ClosedForm) {
  EXPECT_NEAR(alpha({2, 0.25, 1.0}), 0.672838, 1e-6);
  EXPECT_NEAR(alpha({2, 1e-4, 1.0}), 3.3256, 1e-4);
  double prev = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const double a = alpha({2, std::pow(10.0, -k), 1.0});
    EXPECT_GT(a, prev);
    prev = a;
  }
}

TEST(Alpha, MonotoneInKappaAndC) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.01, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double a = U(rng), b = U(rng), C = 3 * U(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (hi - lo < 1e-6) continue;
    EXPECT_GT(alpha({2, lo, C}), alpha({2, hi, C}));
    EXPECT_GT(alpha({3, a, std::min(a, b)}), alpha({3, a, std::max(a, b)}));
  }
}

TEST(IterateGrowth, Examples) {
  auto L = iterate_growth(0.5, 1.0, 1.0, 3);
  ASSERT_EQ(L.size(), 3u);
  EXPECT_DOUBLE_EQ(L[0].radius, 4);
  EXPECT_DOUBLE_EQ(L[0].lower_bound, 2);
  EXPECT_DOUBLE_EQ(L[2].radius, 64);
  EXPECT_DOUBLE_EQ(L[2].lower_bound, 8);
  L = iterate_growth(0.25, 1.0, 1.0, 2);
  EXPECT_DOUBLE_EQ(L[1].lower_bound, 16);
  L = iterate_growth(std::pow(4.0, -4.0 / 3.0), 1.0, 1.0, 1);
  EXPECT_NEAR(L[0].lower_bound, 6.3496042078727978, 1e-12);
  EXPECT_THROW(iterate_growth(1.0, 1, 1, 1), std::invalid_argument);
  EXPECT_THROW(iterate_growth(0.5, 0, 1, 1), std::invalid_argument);
}

TEST(IterateGrowth, MatchesPowerLaw) {
  const double th = 0.3;
  const double a = -std::log(th) / std::log(4.0);
  const auto L = iterate_growth(th, 2.5, 0.1, 6);
  for (std::size_t k = 0; k < L.size(); ++k) {
    const double nu = static_cast<double>(k + 1);
    EXPECT_NEAR(L[k].lower_bound / (std::pow(std::pow(4.0, nu), a) * 2.5), 1.0, 1e-12);
  }
}

TEST(CalibrateC, Examples) {
  EXPECT_NEAR(calibrate_C(-std::expm1(-1.0), 2, 1.0), 1.0, 1e-15);
  // -2 ln(0.842510) = 0.342739
  EXPECT_NEAR(calibrate_C(0.157490, 2, 0.25), 0.342739, 1e-6);
  EXPECT_NEAR(calibrate_C(0.506931, 2, 0.5), 1.0, 1e-6);
  EXPECT_THROW(calibrate_C(1.0, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(calibrate_C(0.0, 2, 0.5), std::invalid_argument);
}

TEST(CalibrateC, RoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const BoundParams p{2 + static_cast<int>(U(rng) * 4), 0.001 + 0.999 * U(rng), 0.05 + 4 * U(rng)};
    EXPECT_NEAR(calibrate_C(theta(p), p.n, p.kappa0) / p.C, 1.0, 1e-12);
    EXPECT_NEAR(-std::log(theta(p)) / std::log(4.0), alpha(p), 1e-12);
  }
}

TEST(Json, Keys) {
  const nlohmann::json j = BoundParams{3, 0.25, 0.5};
  EXPECT_EQ(j.at("n"), 3);
  EXPECT_EQ(j.at("kappa0"), 0.25);
  EXPECT_EQ(j.at("c"), 0.5);
  EXPECT_EQ(j.get<BoundParams>().C, 0.5);
  const nlohmann::json r = check_conditions(LogBarrier(1, 1), 0, 1, 10);
  EXPECT_TRUE(r.at("passed").get<bool>());
  EXPECT_TRUE(r.contains("c2_ratio_max"));
}
