#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diffract/quadrature.hpp"

using namespace diffract;
using namespace diffract::quad;

namespace {

// Random smooth integrand: a short trigonometric polynomial plus a Gaussian.
struct RandomSmooth {
  std::array<double, 4> amp{}, freq{}, phase{};
  double g_center = 0.0, g_width = 1.0;

  explicit RandomSmooth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 4; ++i) {
      amp[i] = u(rng);
      freq[i] = 3.0 * std::abs(u(rng));
      phase[i] = std::numbers::pi * u(rng);
    }
    g_center = u(rng);
    g_width = 0.3 + std::abs(u(rng));
  }
  double operator()(double x) const {
    double s = std::exp(-(x - g_center) * (x - g_center) / (g_width * g_width));
    for (int i = 0; i < 4; ++i) s += amp[i] * std::sin(freq[i] * x + phase[i]);
    return s;
  }
};

}  // namespace

TEST(Adaptive, ClosedFormExamples) {
  EXPECT_NEAR(integrate_adaptive([](double s) { return std::cos(s); }, 0.0, std::numbers::pi, 1e-12).value, 0.0,
              1e-12);
  EXPECT_NEAR(integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0).value, 1.0, 1e-15);
  EXPECT_NEAR(integrate_adaptive([](double s) { return s * s; }, 0.0, 1.0, 1e-12).value, 1.0 / 3.0, 1e-12);
}

TEST(Adaptive, ResultInvariants) {
  auto r = integrate_adaptive([](double s) { return std::exp(s); }, -1.0, 2.0);
  EXPECT_GE(r.error_estimate, 0.0);
  EXPECT_GE(r.evaluations, 1u);
  EXPECT_NEAR(r.value, std::exp(2.0) - std::exp(-1.0), std::max(1e-10, r.error_estimate));
}

TEST(Adaptive, ErrorPaths) {
  try {
    integrate_adaptive([](double s) { return 1.0 / s; }, 0.0, 1.0, 1e-10);
    FAIL() << "expected NonConvergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonConvergence);
  }
  try {
    integrate_adaptive([](double s) { return s > 0.5 ? std::nan("") : 1.0; }, 0.0, 1.0);
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(Adaptive, LinearityAndAdditivityProperty) {
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    RandomSmooth f(rng), g(rng);
    const double alpha = u(rng), beta = u(rng);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const double c = a + (b - a) * std::abs(u(rng)) / 2.0;

    auto rf = integrate_adaptive(f, a, b);
    auto rg = integrate_adaptive(g, a, b);
    auto rc = integrate_adaptive([&](double x) { return alpha * f(x) + beta * g(x); }, a, b);
    const double lin_tol = rc.error_estimate + std::abs(alpha) * rf.error_estimate +
                           std::abs(beta) * rg.error_estimate + 1e-12;
    EXPECT_NEAR(rc.value, alpha * rf.value + beta * rg.value, lin_tol);

    auto left = integrate_adaptive(f, a, c);
    auto right = integrate_adaptive(f, c, b);
    EXPECT_NEAR(left.value + right.value, rf.value,
                left.error_estimate + right.error_estimate + rf.error_estimate + 1e-12);
  }
}

TEST(EndpointSingular, ClosedFormExamples) {
  // Plain form: nodes closer to b than one ulp are lost, costing ~sqrt(eps).
  EXPECT_NEAR(integrate_endpoint_singular([](double s) { return 1.0 / std::sqrt(1.0 - s); }, 0.0, 1.0).value, 2.0,
              5e-8);
  // Gap-aware form: (1 - s) supplied exactly by the routine.
  EXPECT_NEAR(integrate_endpoint_singular([](double, double, double right) { return 1.0 / std::sqrt(right); }, 0.0,
                                          1.0)
                  .value,
              2.0, 1e-12);
  const double beta = 0.3;
  auto arcsine = [beta](double, double left, double right) {
    // beta^2 - s^2 = (beta - s)(beta + s)
    return 1.0 / std::sqrt(right * (beta + left));
  };
  EXPECT_NEAR(integrate_endpoint_singular(arcsine, 0.0, beta).value, std::numbers::pi / 2.0, 1e-10);
  // Oracle: antiderivative -2/3 (1-s)^{1/2} (2 + s) gives 4/3 on [0, 1].
  auto antiderivative = [](double s) { return -2.0 / 3.0 * std::sqrt(1.0 - s) * (2.0 + s); };
  const double exact = antiderivative(1.0) - antiderivative(0.0);
  EXPECT_NEAR(integrate_endpoint_singular([](double, double left, double right) { return left / std::sqrt(right); },
                                          0.0, 1.0)
                  .value,
              exact, 1e-12);
  EXPECT_NEAR(exact, 4.0 / 3.0, 1e-15);
}

TEST(EndpointSingular, BothEndpointsSingular) {
  // int_{-1}^{1} (1 - s^2)^{-1/2} ds = pi
  auto f = [](double, double left, double right) { return 1.0 / std::sqrt(left * right); };
  EXPECT_NEAR(integrate_endpoint_singular(f, -1.0, 1.0).value, std::numbers::pi, 1e-12);
}

TEST(EndpointSingular, AgreesWithAdaptiveOnSmoothIntegrands) {
  std::mt19937_64 rng(0x5EED + 1);
  for (int trial = 0; trial < 20; ++trial) {
    RandomSmooth f(rng);
    const double a = -1.0 + 0.1 * trial, b = a + 1.7;
    EXPECT_NEAR(integrate_endpoint_singular(f, a, b).value, integrate_adaptive(f, a, b).value, 1e-8);
  }
}

TEST(EndpointSingular, NonFiniteInterior) {
  try {
    integrate_endpoint_singular([](double s) { return std::abs(s - 0.5) < 0.1 ? INFINITY : 1.0; }, 0.0, 1.0);
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(Decaying, ClosedFormExamples) {
  EXPECT_NEAR(integrate_decaying([](double s) { return std::exp(-s); }, 0.0, 1e-10, 1.0).value, 1.0, 1e-10);
  EXPECT_NEAR(integrate_decaying([](double s) { return std::exp(-2.0 * s); }, 0.0, 1e-10, 2.0).value, 0.5, 1e-10);
  // Laplace transform of cos at p = 1: p / (p^2 + 1).
  EXPECT_NEAR(integrate_decaying([](double s) { return std::exp(-s) * std::cos(s); }, 0.0, 1e-10, 1.0).value, 0.5,
              1e-8);
}

TEST(Decaying, SlowOscillationWithFastDecayHint) {
  // Windows of length 1/hint are much shorter than the oscillation period, so single
  // windows can sit on a zero of the cosine; the stall test must not fire.
  const double p = 2.0, w = 0.3;
  const auto r = integrate_decaying([&](double s) { return std::exp(-p * s) * std::cos(w * s + 1.4); }, 0.0, 1e-11, p);
  const double exact = (p * std::cos(1.4) - w * std::sin(1.4)) / (p * p + w * w);
  EXPECT_NEAR(r.value, exact, 1e-10);
}

TEST(Decaying, BadHint) {
  try {
    integrate_decaying([](double s) { return 1.0 / (1.0 + s); }, 0.0, 1e-10, 1.0);
    FAIL() << "expected BadHint";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadHint);
  }
}

TEST(GaussLegendre, PolynomialExactness) {
  GaussLegendre rule(8);
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  EXPECT_NEAR(wsum, 2.0, 1e-14);
  // Exact for degree <= 15.
  EXPECT_NEAR(rule.integrate([](double x) { return std::pow(x, 14); }, -1.0, 1.0), 2.0 / 15.0, 1e-14);
  EXPECT_NEAR(rule.integrate([](double x) { return x * x * x + x * x; }, 0.0, 2.0), 4.0 + 8.0 / 3.0, 1e-13);
  EXPECT_NEAR(GaussLegendre(1).integrate([](double x) { return 3.0 * x + 1.0; }, 0.0, 1.0), 2.5, 1e-15);
}
