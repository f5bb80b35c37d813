#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diffract/kernel.hpp"

using namespace diffract;
using namespace diffract::kernel;

namespace {

constexpr double pi = std::numbers::pi;

// Smooth oracle for I_beta: sinh(s/2) = sinh(beta/2) sin(phi) turns the
// integral into int_0^{pi/2} e^{-nu s(phi)} / cosh(s(phi)/2) d phi.
double diffractive_oracle(double nu, double beta) {
  const double k = std::sinh(0.5 * beta);
  return quad::integrate_adaptive(
             [&](double phi) {
               const double s = 2.0 * std::asinh(k * std::sin(phi));
               return std::exp(-nu * s) / std::cosh(0.5 * s);
             },
             0.0, pi / 2.0, 1e-13)
      .value;
}

// Smooth oracle for the region II integral: sin(s/2) = sin(s*/2) sin(phi) gives
// (1/pi) (r1 r2)^{-1/2} int_0^{pi/2} cos(nu s(phi)) / cos(s(phi)/2) d phi.
double region_two_oracle(double nu, double r1, double r2, double t) {
  const double s_star = std::acos((r1 * r1 + r2 * r2 - t * t) / (2.0 * r1 * r2));
  const double k = std::sin(0.5 * s_star);
  const double integral = quad::integrate_adaptive(
                              [&](double phi) {
                                const double s = 2.0 * std::asin(k * std::sin(phi));
                                return std::cos(nu * s) / std::cos(0.5 * s);
                              },
                              0.0, pi / 2.0, 1e-13)
                              .value;
  return integral / (pi * std::sqrt(r1 * r2));
}

// Region III main integral by plain adaptive quadrature (smooth away from the cone).
double region_three_oracle(double nu, double r1, double r2, double t) {
  const double beta = std::acosh((t * t - r1 * r1 - r2 * r2) / (2.0 * r1 * r2));
  const double main = quad::integrate_adaptive(
                          [&](double s) {
                            return std::cos(nu * s) / std::sqrt(t * t - r1 * r1 - r2 * r2 + 2.0 * r1 * r2 * std::cos(s));
                          },
                          0.0, pi, 1e-13)
                          .value;
  return main / pi - std::sin(pi * nu) * diffractive_oracle(nu, beta) / (pi * std::sqrt(r1 * r2));
}

}  // namespace

TEST(ModeParams, Spectrum) {
  ModeParams m(3, 0.25);
  EXPECT_DOUBLE_EQ(m.nu, std::sqrt(9.25));
  EXPECT_GE(ModeParams(-4, 1.0).nu, 4.0);
  EXPECT_THROW(ModeParams(0, -0.1), Error);
  EXPECT_THROW(KernelPoint(0.0, 1.0, 1.0), Error);
}

TEST(Region, Classification) {
  EXPECT_EQ(classify_region(KernelPoint(2.0, 0.5, 1.0)), Region::I);
  EXPECT_EQ(classify_region(KernelPoint(1.0, 1.0, 1.0)), Region::II);
  EXPECT_EQ(classify_region(KernelPoint(1.0, 1.0, 3.0)), Region::III);
  EXPECT_EQ(classify_region(KernelPoint(1.0, 1.0, 2.0)), Region::DiffractiveCone);
  EXPECT_EQ(classify_region(KernelPoint(2.0, 0.5, 1.5)), Region::MainCone);
  EXPECT_EQ(classify_region(KernelPoint(1.0, 1.0, 2.0 + 1e-3), 1e-4), Region::III);
}

TEST(ModeKernel, RegionIIsExactlyZero) {
  for (double a : {0.0, 0.25, 3.0}) {
    for (int n : {0, 1, 5}) EXPECT_EQ(mode_kernel(ModeParams(n, a), KernelPoint(2.0, 0.5, 1.0)), 0.0);
  }
}

TEST(ModeKernel, HalfOrderClosedForm) {
  // nu = 1/2: K = (r1 r2)^{-1/2} / 2 in region II and 0 in region III.
  const ModeParams m(0, 0.25);
  for (auto [r1, r2, t] : {std::tuple{1.0, 1.0, 1.0}, {1.3, 0.7, 1.9}, {0.4, 2.0, 2.3}, {3.0, 2.9, 0.2}}) {
    EXPECT_NEAR(mode_kernel(m, KernelPoint(r1, r2, t)), 0.5 / std::sqrt(r1 * r2), 1e-12);
  }
  for (auto [r1, r2, t] : {std::tuple{1.0, 1.0, 2.5}, {0.3, 1.1, 5.0}, {2.0, 2.0, 4.01}}) {
    EXPECT_NEAR(mode_kernel(m, KernelPoint(r1, r2, t)), 0.0, 1e-12);
  }
}

TEST(ModeKernel, MatchesSubstitutionOracles) {
  for (double a : {0.0, 0.25, 0.7, 3.0}) {
    for (int n : {0, 1, 2, 6}) {
      const ModeParams m(n, a);
      for (auto [r1, r2, t] : {std::tuple{1.0, 1.0, 1.0}, {0.8, 1.5, 1.2}, {2.0, 0.6, 2.1}}) {
        EXPECT_NEAR(mode_kernel(m, KernelPoint(r1, r2, t)), region_two_oracle(m.nu, r1, r2, t), 1e-10)
            << "a=" << a << " n=" << n;
      }
      for (auto [r1, r2, t] : {std::tuple{1.0, 1.0, 2.5}, {0.8, 1.5, 3.0}, {0.5, 0.6, 4.0}}) {
        EXPECT_NEAR(mode_kernel(m, KernelPoint(r1, r2, t)), region_three_oracle(m.nu, r1, r2, t), 1e-10)
            << "a=" << a << " n=" << n;
      }
    }
  }
}

TEST(ModeKernel, FreeCaseHasNoDiffractiveTerm) {
  // a = 0, n = 1: the region III value is the plain s* = pi integral.
  const double r1 = 1.0, r2 = 0.7, t = 2.4;
  const double plain = quad::integrate_adaptive(
                           [&](double s) { return std::cos(s) / std::sqrt(t * t - r1 * r1 - r2 * r2 + 2 * r1 * r2 * std::cos(s)); },
                           0.0, pi, 1e-13)
                           .value /
                       pi;
  EXPECT_NEAR(mode_kernel(ModeParams(1, 0.0), KernelPoint(r1, r2, t)), plain, 1e-11);
}

TEST(ModeKernel, SymmetryProperty) {
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> ur(0.2, 3.0), ut(0.05, 7.0), ua(0.0, 4.0);
  int evaluated = 0;
  for (int i = 0; i < 200; ++i) {
    const double r1 = ur(rng), r2 = ur(rng), t = ut(rng);
    const ModeParams m(static_cast<int>(i % 7), ua(rng));
    const KernelPoint p(r1, r2, t), q(r2, r1, t);
    const Region region = classify_region(p);
    if (region == Region::MainCone || region == Region::DiffractiveCone) continue;
    EXPECT_EQ(mode_kernel(m, p), mode_kernel(m, q));
    ++evaluated;
  }
  EXPECT_GT(evaluated, 150);
}

TEST(ModeKernel, ConeProximity) {
  try {
    mode_kernel(ModeParams(0, 0.25), KernelPoint(1.0, 1.0, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConeProximity);
  }
  EXPECT_THROW(mode_kernel(ModeParams(0, 0.25), KernelPoint(2.0, 1.0, 1.0 + 1e-7)), Error);
}

TEST(DiffractiveIntegral, SmallBetaLimit) {
  // I_beta(nu) = pi/2 - nu beta + O(beta^2): the limit is pi/2, approached linearly.
  for (double nu : {0.5, 1.2, 3.7}) {
    EXPECT_NEAR(diffractive_integral(nu, 1e-4), pi / 2.0 - nu * 1e-4, 1e-7) << "nu=" << nu;
    EXPECT_LT(std::abs(diffractive_integral(nu, 1e-8) - pi / 2.0), 1e-7) << "nu=" << nu;
  }
  EXPECT_NEAR(diffractive_integral(0.0, 1e-4), pi / 2.0, 1e-8);
}

TEST(DiffractiveIntegral, MatchesSubstitutionOracle) {
  EXPECT_NEAR(diffractive_integral(0.0, 1.0), diffractive_oracle(0.0, 1.0), 1e-8);
  for (double nu : {0.0, 0.5, 1.7, 6.0}) {
    for (double beta : {1e-3, 0.2, 1.0, 3.0}) {
      EXPECT_NEAR(diffractive_integral(nu, beta), diffractive_oracle(nu, beta), 1e-11) << nu << " " << beta;
    }
  }
}

TEST(DiffractiveIntegral, HalfOrderClosedForm) {
  // I_beta(1/2) = arcsin(1 / cosh(beta/2)), the value that makes the nu = 1/2 region III kernel vanish.
  for (double beta : {0.01, 0.5, 2.0}) {
    EXPECT_NEAR(diffractive_integral(0.5, beta), std::asin(1.0 / std::cosh(0.5 * beta)), 1e-12);
  }
}

TEST(DiffractiveIntegral, DecreasingInNu) {
  for (double beta : {0.3, 1.0, 2.5}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double nu = 0.0; nu < 8.0; nu += 0.5) {
      const double v = diffractive_integral(nu, beta);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
  EXPECT_THROW(diffractive_integral(1.0, 0.0), Error);
}

TEST(DiffractiveJump, Values) {
  EXPECT_NEAR(diffractive_jump(ModeParams(0, 0.25), 1.0, 1.0), -0.5, 1e-15);
  for (int n = 0; n < 6; ++n) EXPECT_EQ(diffractive_jump(ModeParams(n, 0.0), 1.3, 0.4), 0.0);
  EXPECT_EQ(diffractive_jump(ModeParams(1, 3.0), 1.0, 1.0), 0.0);
}

TEST(JumpCondition, ExclusionSet) {
  EXPECT_FALSE(is_mode_jump_nonzero(1, 3.0));
  EXPECT_TRUE(is_mode_jump_nonzero(0, 0.25));
  EXPECT_FALSE(is_mode_jump_nonzero(2, 0.0));
  // a = m^2 + 2 |n| m makes nu_n = |n| + m an integer.
  for (int n = 0; n < 5; ++n) {
    for (int m = 1; m < 5; ++m) {
      EXPECT_FALSE(is_mode_jump_nonzero(n, m * m + 2.0 * n * m));
      EXPECT_TRUE(is_mode_jump_nonzero(n, m * m + 2.0 * n * m + 0.5));
    }
  }
}

TEST(ConeLimits, HalfOrderJump) {
  const auto res = cone_limits(ModeParams(0, 0.25), 1.0, 2.0);
  EXPECT_NEAR(res.jump_estimate, -0.5, 1e-3);
  EXPECT_NEAR(res.jump_estimate, -0.5, 1e-8);
  ASSERT_EQ(res.samples.size(), 6u);
  for (const auto& s : res.samples) EXPECT_NEAR(s.difference, s.three_side - s.two_side, 0.0);
}

TEST(ConeLimits, FreeCaseNull) {
  for (int n = 0; n <= 10; ++n) {
    EXPECT_LT(std::abs(cone_limits(ModeParams(n, 0.0), 1.0, 2.0).jump_estimate), 1e-6) << "n=" << n;
  }
}

TEST(ConeLimits, JumpConsistencyGrid) {
  for (double a : {0.1, 0.7, 2.0, 5.5}) {
    for (int n : {0, 1, 3}) {
      for (auto [r2, t] : {std::pair{1.0, 2.0}, {0.6, 2.5}, {2.0, 2.7}}) {
        const ModeParams m(n, a);
        EXPECT_NEAR(cone_limits(m, r2, t).jump_estimate, diffractive_jump(m, t - r2, r2), 1e-6)
            << "a=" << a << " n=" << n << " r2=" << r2 << " t=" << t;
      }
    }
  }
}

TEST(ConeLimits, JumpScalesWithRadii) {
  // Halving r2 at fixed cone point r1 = t - r2 scales the jump by sqrt(2).
  const ModeParams m(1, 0.6);
  const double j1 = cone_limits(m, 1.0, 2.5).jump_estimate;     // r1 = 1.5, r2 = 1
  const double j2 = cone_limits(m, 0.5, 2.0).jump_estimate;     // r1 = 1.5, r2 = 0.5
  EXPECT_NEAR(j2 / j1, std::sqrt(2.0), 1e-6);
}

TEST(ConeLimits, ExcludedCouplingHasNoJump) {
  EXPECT_LT(std::abs(cone_limits(ModeParams(1, 3.0), 1.0, 2.0).jump_estimate), 1e-6);
}

TEST(ConeLimits, InvalidArguments) {
  EXPECT_THROW(cone_limits(ModeParams(0, 0.25), 1.0, 0.5), Error);
  EXPECT_THROW(cone_limits(ModeParams(0, 0.25), 1.0, 2.0, {1e-3, 2e-3}), Error);
}

TEST(Extrapolation, RecoversModelConstant) {
  std::vector<double> d, y;
  for (int k = 0; k < 6; ++k) {
    const double x = 1e-2 / std::pow(2.0, k);
    d.push_back(x);
    y.push_back(0.75 + 3.0 * x * std::log(x) - 2.0 * x + 0.5 * x * x);
  }
  EXPECT_NEAR(extrapolate_to_zero(d, y), 0.75, 1e-12);
  EXPECT_EQ(extrapolate_to_zero({0.1}, {4.0}), 4.0);
}

TEST(Synthesis, RealAtZeroAngleAndRegionIZero) {
  const auto r = synthesize_kernel(0.25, KernelPoint(1.0, 1.2, 0.9), 0.0, 20);
  EXPECT_LE(std::abs(r.value.imag()), 1e-12);
  const auto z = synthesize_kernel(0.7, KernelPoint(3.0, 1.0, 1.0), 0.4, 15);
  EXPECT_EQ(z.value, std::complex<double>(0.0, 0.0));
  for (double k : z.mode_values) EXPECT_EQ(k, 0.0);
}

TEST(Synthesis, FreeCaseConvergesToFreePropagator) {
  const KernelPoint p(1.0, 1.5, 1.0);
  for (double dtheta : {0.0, 0.3}) {
    const double exact = free_mode_sum(p, dtheta);
    const auto coarse = synthesize_kernel(0.0, p, dtheta, 50);
    const auto fine = synthesize_kernel(0.0, p, dtheta, 400);
    EXPECT_LT(std::abs(fine.fejer_value.real() - exact), std::abs(coarse.fejer_value.real() - exact));
    EXPECT_LT(std::abs(fine.fejer_value.real() - exact), 1e-3 * exact);
    EXPECT_LT(std::abs(fine.value.real() - exact), 0.1 * exact);
    EXPECT_LT(fine.tail_envelope, coarse.tail_envelope);
  }
}

TEST(Synthesis, ModeEnvelopeDecays) {
  // Block maxima of |K_n| over [n, 2n) are non-increasing.
  const auto r = synthesize_kernel(0.4, KernelPoint(1.0, 1.2, 1.1), 0.0, 256);
  double prev = std::numeric_limits<double>::infinity();
  for (int lo = 8; lo < 256; lo *= 2) {
    double block = 0.0;
    for (int n = lo; n < 2 * lo; ++n) block = std::max(block, std::abs(r.mode_values[static_cast<std::size_t>(n)]));
    EXPECT_LE(block, prev);
    prev = block;
  }
}

TEST(LipschitzHankel, ResidualSmall) {
  EXPECT_LT(verify_lipschitz_hankel(0.5, 1.0, 1.0, 1.0).residual, 1e-6);
  EXPECT_LT(verify_lipschitz_hankel(0.8, 0.7, 1.3, 2.0).residual, 1e-6);
  const auto a = verify_lipschitz_hankel(1.7, 0.4, 1.9, 0.6);
  const auto b = verify_lipschitz_hankel(1.7, 1.9, 0.4, 0.6);
  EXPECT_LT(a.residual, 1e-6);
  EXPECT_LT(b.residual, 1e-6);
  EXPECT_NEAR(a.lhs, b.lhs, 1e-9);
  EXPECT_EQ(a.rhs, b.rhs);
}

TEST(LipschitzHankel, ResidualGrid) {
  for (double nu : {0.3, 1.5, 3.2}) {
    for (double ratio : {0.5, 1.0, 2.0}) {
      for (double t : {0.5, 1.0, 2.0}) {
        EXPECT_LT(verify_lipschitz_hankel(nu, ratio, 1.0, t).residual, 1e-6) << nu << " " << ratio << " " << t;
      }
    }
  }
}
