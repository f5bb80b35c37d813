#pragma once

// Gamma, Bessel J of real order nu >= 0, and the Legendre function of the
// second kind Q_{nu-1/2} on (1, inf).

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "diffract/error.hpp"
#include "diffract/quadrature.hpp"

namespace diffract {

/// Order of a Bessel function; finite and non-negative.
class BesselOrder {
 public:
  explicit BesselOrder(double nu) : nu_(nu) {
    if (!std::isfinite(nu) || nu < 0.0) {
      std::ostringstream os;
      os << "Bessel order must be finite and >= 0, got " << nu;
      throw Error(ErrorKind::DomainError, "specfun", os.str());
    }
  }
  double value() const noexcept { return nu_; }

 private:
  double nu_;
};

namespace specfun {

/// Gamma function for x > 0 (Lanczos, g = 7, nine coefficients).
inline double gamma(double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "gamma requires x > 0, got " << x;
    throw Error(ErrorKind::DomainError, "specfun", os.str());
  }
  if (x < 0.5) return gamma(x + 1.0) / x;
  static constexpr std::array<double, 9> coeff = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double series = coeff[0];
  for (int i = 1; i < 9; ++i) series += coeff[i] / (z + i);
  const double t = z + 7.5;
  // sqrt(2 pi) t^(z+1/2) e^-t, split to delay overflow for large x.
  const double half_power = std::pow(t, 0.5 * (z + 0.5));
  return std::sqrt(2.0 * std::numbers::pi) * half_power * (half_power * std::exp(-t)) * series;
}

namespace detail {

// Ascending series, carried in extended precision to absorb cancellation
// for z up to ~20.
inline double bessel_j_series(double nu, double z) {
  using ld = long double;
  const ld half_z = static_cast<ld>(z) / 2;
  const ld q = half_z * half_z;
  ld term = 1;
  ld sum = 1;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (static_cast<ld>(k) * (static_cast<ld>(k) + nu));
    sum += term;
    if (std::abs(term) < std::numeric_limits<ld>::epsilon() * std::abs(sum) && k > half_z) break;
  }
  const ld prefactor = std::pow(half_z, static_cast<ld>(nu)) / static_cast<ld>(gamma(nu + 1.0));
  return static_cast<double>(prefactor * sum);
}

// Hankel asymptotic expansion truncated at its smallest term.
inline double bessel_j_asymptotic(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * z);
    const double mag = std::abs(term);
    // Past the peak the terms shrink until (2k-1)^2 exceeds mu by a wide
    // margin; stop at the first growth after that point.
    if (odd * odd > mu && mag > last) break;
    last = mag;
    // Terms alternate between Q (odd k) and P (even k) with signs (-1)^{floor(k/2)}.
    const double signed_term = ((k / 2) % 2 == 0) ? term : -term;
    if (k % 2 == 1) {
      q += signed_term;
    } else {
      p += signed_term;
    }
    if (mag < 1e-17 * std::abs(p)) break;
  }
  const double phase = z - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * z)) * (p * std::cos(phase) - q * std::sin(phase));
}

}  // namespace detail

/// Bessel function of the first kind J_nu(z), nu >= 0, z >= 0.
///
/// Ascending series (extended precision) for z <= max(20, nu), Hankel's
/// asymptotic expansion beyond. Accurate to ~1e-12 absolute for nu <= 12,
/// z <= 100.
inline double bessel_j(BesselOrder order, double z) {
  const double nu = order.value();
  if (!(z >= 0.0) || !std::isfinite(z)) {
    std::ostringstream os;
    os << "bessel_j requires z >= 0, got " << z;
    throw Error(ErrorKind::DomainError, "specfun", os.str());
  }
  if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (z <= std::max(20.0, nu)) return detail::bessel_j_series(nu, z);
  return detail::bessel_j_asymptotic(nu, z);
}

inline double bessel_j(double nu, double z) { return bessel_j(BesselOrder(nu), z); }

/// acosh(1 + x) for x >= 0 without cancellation near x = 0.
inline double acosh1p(double x) { return std::log1p(x + std::sqrt(x * (2.0 + x))); }

/// Q_{nu-1/2}(Z) for Z > 1 from the Heine-type representation
///   Q_{nu-1/2}(cosh eta) = int_eta^inf e^{-nu s} (2 cosh s - 2 cosh eta)^{-1/2} ds.
///
/// The substitution s = eta + w^2 removes the endpoint singularity; the
/// result is integrated with the decaying-tail routine (hint nu + 1/2).
inline double legendre_q_shifted(BesselOrder order, double Z, double tol = 1e-12) {
  if (!(Z > 1.0) || !std::isfinite(Z)) {
    std::ostringstream os;
    os << "legendre_q_shifted requires Z > 1, got " << Z;
    throw Error(ErrorKind::DomainError, "specfun", os.str());
  }
  const double nu = order.value();
  const double eta = acosh1p(Z - 1.0);
  const double sinh_eta = std::sinh(eta);
  // e^{-nu eta} / sqrt(sinh eta) is pulled out so the tolerance is relative.
  const double scale = std::exp(-nu * eta) / std::sqrt(sinh_eta);
  auto integrand = [nu, eta, sinh_eta](double w) {
    const double half_w2 = 0.5 * w * w;
    // w / sqrt(sinh(w^2/2)) -> sqrt(2) as w -> 0.
    const double ratio = (half_w2 < 1e-8) ? std::sqrt(2.0) : w / std::sqrt(std::sinh(half_w2));
    const double outer = (half_w2 < 1e-8) ? 1.0 + half_w2 * std::cosh(eta) / sinh_eta
                                          : std::sinh(eta + half_w2) / sinh_eta;
    return ratio * std::exp(-nu * w * w) / std::sqrt(outer);
  };
  return scale * quad::integrate_decaying(integrand, 0.0, tol, nu + 0.5).value;
}

inline double legendre_q_shifted(double nu, double Z) { return legendre_q_shifted(BesselOrder(nu), Z); }

}  // namespace specfun
}  // namespace diffract
