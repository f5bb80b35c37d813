#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diffract/quadrature.hpp"
#include "diffract/specfun.hpp"

using namespace diffract;
using diffract::specfun::bessel_j;
namespace sf = diffract::specfun;
using diffract::specfun::legendre_q_shifted;

namespace {

// Poisson-type integral, valid for integer and non-integer nu >= 0:
// J_nu(z) = (1/pi) int_0^pi cos(nu t - z sin t) dt
//         - sin(nu pi)/pi int_0^inf e^{-z sinh t - nu t} dt.
double bessel_j_integral(double nu, double z) {
  const double pi = std::numbers::pi;
  const double head =
      quad::integrate_adaptive([&](double t) { return std::cos(nu * t - z * std::sin(t)); }, 0.0, pi, 1e-13).value;
  double tail = 0.0;
  if (std::sin(nu * pi) != 0.0) {
    tail = quad::integrate_decaying([&](double t) { return std::exp(-z * std::sinh(t) - nu * t); }, 0.0, 1e-13,
                                    std::max(z, 1.0))
               .value;
  }
  return head / pi - std::sin(nu * pi) / pi * tail;
}

}  // namespace

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(sf::gamma(1.0), 1.0, 1e-14);
  EXPECT_NEAR(sf::gamma(0.5), std::sqrt(std::numbers::pi), 1e-14);
  EXPECT_NEAR(sf::gamma(5.0), 24.0, 1e-12);
}

TEST(Gamma, MatchesStdTgamma) {
  for (double x = 0.05; x < 30.0; x += 0.37) {
    EXPECT_NEAR(sf::gamma(x) / std::tgamma(x), 1.0, 1e-13) << "x=" << x;
  }
}

TEST(Gamma, RecurrenceProperty) {
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(sf::gamma(x + 1.0) / (x * sf::gamma(x)), 1.0, 1e-13);
  }
}

TEST(Gamma, DomainError) {
  EXPECT_THROW(sf::gamma(0.0), Error);
  EXPECT_THROW(sf::gamma(-1.5), Error);
}

TEST(BesselJ, ClosedFormExamples) {
  EXPECT_NEAR(bessel_j(0.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(bessel_j(2.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(bessel_j(0.5, std::numbers::pi), 0.0, 1e-14);
  for (double z = 0.1; z < 80.0; z *= 1.3) {
    const double exact = std::sqrt(2.0 / (std::numbers::pi * z)) * std::sin(z);
    EXPECT_NEAR(bessel_j(0.5, z), exact, 1e-13) << "z=" << z;
  }
}

TEST(BesselJ, HighPrecisionReference) {
  // 30-digit reference value.
  EXPECT_NEAR(bessel_j(2.3, 1.7), 0.204797228537508083296877271997, 1e-14);
  EXPECT_NEAR(bessel_j_integral(2.3, 1.7), 0.204797228537508083296877271997, 1e-12);
}

TEST(BesselJ, MatchesStdLibrary) {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.3, 4.0, 7.25, 10.0, 12.0}) {
    for (double z : {0.01, 0.3, 1.0, 3.7, 9.0, 15.0, 19.9, 20.1, 27.0, 45.0, 99.0}) {
      EXPECT_NEAR(bessel_j(nu, z), std::cyl_bessel_j(nu, z), 1e-12) << "nu=" << nu << " z=" << z;
    }
  }
}

TEST(BesselJ, MatchesIntegralRepresentation) {
  for (double nu : {0.0, 0.7, 1.0, 3.5, 6.0}) {
    for (double z : {0.5, 4.0, 12.0, 25.0}) {
      EXPECT_NEAR(bessel_j(nu, z), bessel_j_integral(nu, z), 1e-11) << "nu=" << nu << " z=" << z;
    }
  }
}

TEST(BesselJ, RecurrenceAndBoundProperty) {
  std::mt19937_64 rng(0x5EED + 2);
  std::uniform_real_distribution<double> unu(1.0, 10.0), uz(0.2, 60.0);
  for (int i = 0; i < 300; ++i) {
    const double nu = unu(rng), z = uz(rng);
    const double jm = bessel_j(nu - 1.0, z), j0 = bessel_j(nu, z), jp = bessel_j(nu + 1.0, z);
    EXPECT_NEAR(jm + jp, 2.0 * nu / z * j0, 1e-11 * std::max(1.0, 2.0 * nu / z)) << "nu=" << nu << " z=" << z;
    EXPECT_LE(std::abs(j0), 1.0);
  }
}

TEST(BesselJ, OdeResidualProperty) {
  // z^2 J'' + z J' + (z^2 - nu^2) J = 0 with J', J'' from the recurrences.
  for (double nu : {1.5, 3.0, 5.2}) {
    for (double z = 0.5; z < 50.0; z += 1.7) {
      const double j = bessel_j(nu, z);
      const double dj = 0.5 * (bessel_j(nu - 1.0, z) - bessel_j(nu + 1.0, z));
      const double h = 1e-3;
      const double d2j = (bessel_j(nu, z + h) - 2.0 * j + bessel_j(nu, z - h)) / (h * h);
      const double residual = z * z * d2j + z * dj + (z * z - nu * nu) * j;
      EXPECT_NEAR(residual, 0.0, 1e-5 * std::max(1.0, z * z)) << "nu=" << nu << " z=" << z;
    }
  }
}

TEST(BesselJ, DomainErrors) {
  EXPECT_THROW(bessel_j(-0.5, 1.0), Error);
  EXPECT_THROW(bessel_j(1.0, -1.0), Error);
  EXPECT_THROW(bessel_j(std::nan(""), 1.0), Error);
  try {
    BesselOrder bad(-1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(LegendreQ, ClosedFormExamples) {
  // nu = 1/2 and nu = 3/2 give integer degree 0 and 1.
  EXPECT_NEAR(legendre_q_shifted(0.5, 2.0), 0.5 * std::log(3.0), 1e-11);
  EXPECT_NEAR(legendre_q_shifted(1.5, 2.0), std::log(3.0) - 1.0, 1e-11);
  EXPECT_NEAR(legendre_q_shifted(1.5, 2.0), 0.0986122887, 1e-10);
  for (double Z : {1.001, 1.1, 1.5, 3.0, 10.0, 100.0}) {
    const double L = std::log((Z + 1.0) / (Z - 1.0));
    EXPECT_NEAR(legendre_q_shifted(0.5, Z), 0.5 * L, 1e-10 * std::max(1.0, L)) << "Z=" << Z;
    EXPECT_NEAR(legendre_q_shifted(1.5, Z), 0.5 * Z * L - 1.0, 1e-10 * std::max(1.0, Z * L)) << "Z=" << Z;
  }
}

TEST(LegendreQ, PositiveAndDecreasingInZ) {
  for (double nu : {0.0, 0.3, 1.0, 2.5, 7.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double Z = 1.01; Z < 50.0; Z *= 1.4) {
      const double q = legendre_q_shifted(nu, Z);
      EXPECT_GT(q, 0.0);
      EXPECT_LT(q, prev) << "nu=" << nu << " Z=" << Z;
      prev = q;
    }
  }
}

TEST(LegendreQ, DomainErrors) {
  try {
    legendre_q_shifted(0.5, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
  EXPECT_THROW(legendre_q_shifted(0.5, 0.3), Error);
  EXPECT_THROW(legendre_q_shifted(-1.0, 2.0), Error);
}
