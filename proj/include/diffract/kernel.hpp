#pragma once

// Per-mode kernel of the wave equation with inverse-square potential a/r^2.
//
// Mode n has effective Bessel order nu_n = sqrt(n^2 + a). The per-mode kernel
// K_n(r1, r2, t) solves the radial problem with u(0) = 0, u_t(0) = delta(r - r2)
// normalized against r dr, so that the full kernel is
// (1 / 2 pi) sum_n e^{i n dtheta} K_n. With D(s) = t^2 - r1^2 - r2^2 + 2 r1 r2 cos s:
//
//   region I   (t < |r1 - r2|)        K = 0
//   region II  (|r1-r2| < t < r1+r2)  K = (1/pi) int_0^{s*} cos(nu s) D^{-1/2} ds
//   region III (t > r1 + r2)          K = (1/pi) int_0^{pi} cos(nu s) D^{-1/2} ds
//                                         - (1/pi) (r1 r2)^{-1/2} sin(pi nu) I_beta(nu)
//
// with I_beta(nu) = int_0^beta e^{-nu s} (2 cosh beta - 2 cosh s)^{-1/2} ds. For a = 0
// the mode sum reproduces (t^2 - |x1 - x2|^2)_+^{-1/2}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "diffract/error.hpp"
#include "diffract/quadrature.hpp"
#include "diffract/specfun.hpp"

namespace diffract::kernel {

/// sin(pi x) with exact zeros at the integers.
inline double sin_pi(double x) {
  const double k = std::round(x);
  const double s = std::sin(std::numbers::pi * (x - k));
  return (static_cast<long long>(k) % 2 == 0) ? s : -s;
}

struct ModeParams {
  int n = 0;
  double a = 0.0;
  double nu = 0.0;

  ModeParams() = default;
  ModeParams(int n_, double a_) : n(n_), a(a_), nu(std::sqrt(static_cast<double>(n_) * n_ + a_)) {
    if (!(a_ >= 0.0) || !std::isfinite(a_)) {
      std::ostringstream os;
      os << "coupling a must be finite and >= 0, got " << a_;
      throw Error(ErrorKind::DomainError, "kernel", os.str());
    }
  }
};

struct KernelPoint {
  double r1, r2, t;

  KernelPoint(double r1_, double r2_, double t_) : r1(r1_), r2(r2_), t(t_) {
    if (!(r1 > 0.0) || !(r2 > 0.0) || !(t > 0.0) || !std::isfinite(r1 + r2 + t)) {
      throw Error(ErrorKind::DomainError, "kernel", "kernel point needs r1, r2, t > 0");
    }
  }
};

enum class Region { I, II, III, MainCone, DiffractiveCone };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::MainCone: return "main-cone";
    case Region::DiffractiveCone: return "diffractive-cone";
  }
  return "?";
}

inline double default_eps_cone(const KernelPoint& p) { return 1e-6 * (p.r1 + p.r2 + p.t); }

inline Region classify_region(const KernelPoint& p, double eps_cone) {
  const double inner = std::abs(p.r1 - p.r2), outer = p.r1 + p.r2;
  if (std::abs(p.t - inner) <= eps_cone) return Region::MainCone;
  if (std::abs(p.t - outer) <= eps_cone) return Region::DiffractiveCone;
  if (p.t < inner) return Region::I;
  if (p.t < outer) return Region::II;
  return Region::III;
}

inline Region classify_region(const KernelPoint& p) { return classify_region(p, default_eps_cone(p)); }

inline constexpr double kernel_tol = 1e-12;

/// I_beta(nu) = int_0^beta e^{-nu s} (2 cosh beta - 2 cosh s)^{-1/2} ds; tends to pi/2 as beta -> 0.
inline double diffractive_integral(double nu, double beta, double tol = kernel_tol) {
  if (!(beta > 0.0) || !(nu >= 0.0)) {
    std::ostringstream os;
    os << "diffractive_integral needs beta > 0 and nu >= 0, got beta=" << beta << " nu=" << nu;
    throw Error(ErrorKind::DomainError, "kernel", os.str());
  }
  // 2 cosh beta - 2 cosh s = 4 sinh((beta + s)/2) sinh((beta - s)/2)
  auto f = [nu, beta](double s, double, double gap) {
    return std::exp(-nu * s) / std::sqrt(4.0 * std::sinh(beta - 0.5 * gap) * std::sinh(0.5 * gap));
  };
  return quad::integrate_endpoint_singular(f, 0.0, beta, tol).value;
}

/// -(1/2) (r1 r2)^{-1/2} sin(pi nu_n): the kernel jump (III side minus II side)
/// across the diffractive cone t = r1 + r2.
inline double diffractive_jump(const ModeParams& m, double r1, double r2) {
  return -0.5 * sin_pi(m.nu) / std::sqrt(r1 * r2);
}

/// True iff sqrt(n^2 + a) is not an integer, i.e. a != m^2 + 2|n| m for all integers m >= 0.
inline bool is_mode_jump_nonzero(int n, double a) {
  const double nu = std::sqrt(static_cast<double>(n) * n + a);
  return std::abs(nu - std::round(nu)) > 1e-12 * std::max(1.0, nu);
}

namespace detail {

// Stable pieces of the cone geometry for r1, r2, t.
struct ConeGeometry {
  double r1r2;
  double one_plus_z;   // 1 + Z, Z = (r1^2 + r2^2 - t^2) / (2 r1 r2)
  double one_minus_z;  // 1 - Z
  double excess;       // t^2 - (r1 + r2)^2
};

inline ConeGeometry geometry(double r1, double r2, double t) {
  const double lo = std::min(r1, r2), hi = std::max(r1, r2);
  const double r1r2 = lo * hi;
  const double sum = lo + hi, diff = hi - lo;
  return {r1r2, (sum - t) * (sum + t) / (2.0 * r1r2), (t - diff) * (t + diff) / (2.0 * r1r2), (t - sum) * (t + sum)};
}

inline double region_two(double nu, const ConeGeometry& g, double tol) {
  const double sp = std::sqrt(g.one_plus_z), sm = std::sqrt(g.one_minus_z);
  const double s_star = 2.0 * std::atan2(sm, sp);
  const double c = 2.0 * std::atan2(sp, sm);  // pi - s*
  const double r1r2 = g.r1r2;
  // D = 2 r1 r2 (cos s - cos s*) = 4 r1 r2 sin((s* + s)/2) sin((s* - s)/2), with
  // (s* + s)/2 = pi - (c + v/2) for v = s* - s.
  auto f = [nu, c, r1r2](double s, double, double v) {
    const double d = 4.0 * r1r2 * std::sin(c + 0.5 * v) * std::sin(0.5 * v);
    return std::cos(nu * s) / std::sqrt(d);
  };
  return quad::integrate_endpoint_singular(f, 0.0, s_star, tol).value / std::numbers::pi;
}

inline double region_three_main(double nu, const ConeGeometry& g, double tol) {
  const double e = g.excess, r1r2 = g.r1r2;
  // With v = pi - s: D = t^2 - (r1 + r2)^2 + 4 r1 r2 sin^2(v/2).
  auto f = [nu, e, r1r2](double s, double, double v) {
    const double sv = std::sin(0.5 * v);
    return std::cos(nu * s) / std::sqrt(e + 4.0 * r1r2 * sv * sv);
  };
  return quad::integrate_endpoint_singular(f, 0.0, std::numbers::pi, tol).value / std::numbers::pi;
}

}  // namespace detail

/// Per-mode kernel K_{nu_n}(r1, r2, t). Throws ConeProximity within eps_cone of a cone.
inline double mode_kernel(const ModeParams& m, const KernelPoint& p, double eps_cone, double tol = kernel_tol) {
  const Region region = classify_region(p, eps_cone);
  if (region == Region::I) return 0.0;
  if (region == Region::MainCone || region == Region::DiffractiveCone) {
    std::ostringstream os;
    os << "point (r1=" << p.r1 << ", r2=" << p.r2 << ", t=" << p.t << ") lies within " << eps_cone << " of the "
       << to_string(region) << "; use cone_limits";
    throw Error(ErrorKind::ConeProximity, "kernel", os.str());
  }
  const auto g = detail::geometry(p.r1, p.r2, p.t);
  if (region == Region::II) return detail::region_two(m.nu, g, tol);
  double value = detail::region_three_main(m.nu, g, tol);
  const double sp = sin_pi(m.nu);
  if (sp != 0.0) {
    const double beta = specfun::acosh1p(g.excess / (2.0 * g.r1r2));
    value -= sp * diffractive_integral(m.nu, beta, tol) / (std::numbers::pi * std::sqrt(g.r1r2));
  }
  return value;
}

inline double mode_kernel(const ModeParams& m, const KernelPoint& p) { return mode_kernel(m, p, default_eps_cone(p)); }

/// Least-squares extrapolation to delta -> 0 of samples y(delta) assumed to follow
/// c0 + c1 d ln d + c2 d + c3 d^2 ln d + c4 d^2 + ...; the basis is truncated to the
/// number of samples minus one (at least one column).
inline double extrapolate_to_zero(const std::vector<double>& delta, const std::vector<double>& y) {
  const std::size_t n = delta.size();
  if (n == 0 || y.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "kernel", "extrapolation needs matching non-empty samples");
  }
  if (n == 1) return y[0];
  const std::size_t cols = std::min<std::size_t>(n - 1, 5);
  const double d0 = *std::max_element(delta.begin(), delta.end());
  auto basis = [](std::size_t j, double x) {
    switch (j) {
      case 0: return 1.0;
      case 1: return x * std::log(x);
      case 2: return x;
      case 3: return x * x * std::log(x);
      default: return x * x;
    }
  };
  // Modified Gram-Schmidt QR of the n x cols design matrix.
  std::vector<std::vector<double>> q(cols, std::vector<double>(n));
  std::vector<std::vector<double>> r(cols, std::vector<double>(cols, 0.0));
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < n; ++i) q[j][i] = basis(j, delta[i] / d0);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q[k][i] * q[j][i];
      r[k][j] = dot;
      for (std::size_t i = 0; i < n; ++i) q[j][i] -= dot * q[k][i];
    }
    double norm = 0.0;
    for (double v : q[j]) norm += v * v;
    norm = std::sqrt(norm);
    r[j][j] = norm;
    for (double& v : q[j]) v /= norm;
  }
  std::vector<double> coef(cols, 0.0), qty(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < n; ++i) qty[j] += q[j][i] * y[i];
  }
  for (std::size_t j = cols; j-- > 0;) {
    double s = qty[j];
    for (std::size_t k = j + 1; k < cols; ++k) s -= r[j][k] * coef[k];
    coef[j] = s / r[j][j];
  }
  return coef[0];
}

struct ConeSample {
  double delta;
  double two_side;      // K at r1 = t - r2 + delta (region II)
  double three_side;    // K at r1 = t - r2 - delta (region III)
  double difference;    // three_side - two_side
  double extrapolated;  // extrapolation using this and all earlier (larger) deltas
};

struct ConeLimitResult {
  std::vector<ConeSample> samples;
  double jump_estimate = 0.0;
};

/// Six halvings starting from 2e-3 min(r2, t - r2) / max(1, nu); the
/// expansion in delta is effectively one in nu delta.
inline std::vector<double> default_cone_deltas(double r2, double t, double nu = 0.0) {
  std::vector<double> d;
  double delta = 2e-3 * std::min(r2, t - r2) / std::max(1.0, nu);
  for (int k = 0; k < 6; ++k, delta *= 0.5) d.push_back(delta);
  return d;
}

/// One-sided limits of K across the diffractive cone r1 = t - r2, extrapolated
/// from the given positive decreasing offsets.
inline ConeLimitResult cone_limits(const ModeParams& m, double r2, double t, const std::vector<double>& delta_list) {
  if (!(r2 > 0.0) || !(t > r2)) {
    throw Error(ErrorKind::DomainError, "kernel", "cone_limits needs t > r2 > 0");
  }
  if (delta_list.empty()) throw Error(ErrorKind::InvalidArgument, "kernel", "cone_limits needs offsets");
  const double r1c = t - r2;
  for (std::size_t i = 0; i < delta_list.size(); ++i) {
    if (!(delta_list[i] > 0.0) || !(delta_list[i] < r1c) || (i > 0 && !(delta_list[i] < delta_list[i - 1]))) {
      throw Error(ErrorKind::InvalidArgument, "kernel", "cone offsets must be positive, decreasing and < t - r2");
    }
  }
  ConeLimitResult res;
  std::vector<double> ds, diffs;
  for (double delta : delta_list) {
    ConeSample s{};
    s.delta = delta;
    const KernelPoint p2(r1c + delta, r2, t), p3(r1c - delta, r2, t);
    // The offsets are the caller's cone tolerance: evaluate with a band well inside delta.
    s.two_side = mode_kernel(m, p2, 1e-3 * delta);
    s.three_side = mode_kernel(m, p3, 1e-3 * delta);
    s.difference = s.three_side - s.two_side;
    ds.push_back(delta);
    diffs.push_back(s.difference);
    s.extrapolated = extrapolate_to_zero(ds, diffs);
    res.samples.push_back(s);
  }
  res.jump_estimate = res.samples.back().extrapolated;
  return res;
}

inline ConeLimitResult cone_limits(const ModeParams& m, double r2, double t) {
  return cone_limits(m, r2, t, default_cone_deltas(r2, t, m.nu));
}

struct SynthesisResult {
  std::complex<double> value;
  std::complex<double> fejer_value;  // Cesaro mean of the partial sums up to n_max
  std::vector<double> mode_values;  // K_n for n = 0..n_max
  double tail_envelope = 0.0;       // max |K_n| over the last quarter of modes
};

/// Partial sum sum_{|n| <= n_max} e^{i n dtheta} K_{nu_n}(p), accumulated in the
/// fixed order n = -n_max .. n_max.
inline SynthesisResult synthesize_kernel(double a, const KernelPoint& p, double dtheta, int n_max) {
  if (n_max < 0) throw Error(ErrorKind::InvalidArgument, "kernel", "n_max must be >= 0");
  SynthesisResult res;
  res.mode_values.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) res.mode_values[static_cast<std::size_t>(n)] = mode_kernel(ModeParams(n, a), p);
  std::complex<double> sum = 0.0, fejer = 0.0;
  for (int n = -n_max; n <= n_max; ++n) {
    const double k = res.mode_values[static_cast<std::size_t>(std::abs(n))];
    const std::complex<double> term = std::polar(k, static_cast<double>(n) * dtheta);
    sum += term;
    fejer += (1.0 - std::abs(n) / (n_max + 1.0)) * term;
  }
  res.value = sum;
  res.fejer_value = fejer;
  for (int n = n_max - n_max / 4; n <= n_max; ++n) {
    res.tail_envelope = std::max(res.tail_envelope, std::abs(res.mode_values[static_cast<std::size_t>(n)]));
  }
  return res;
}

/// Free 2D comparison value (t^2 - |x1 - x2|^2)_+^{-1/2} for the a = 0 synthesis.
inline double free_mode_sum(const KernelPoint& p, double dtheta) {
  const double rho2 = p.r1 * p.r1 + p.r2 * p.r2 - 2.0 * p.r1 * p.r2 * std::cos(dtheta);
  const double d = p.t * p.t - rho2;
  return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
}

struct LipschitzHankelResult {
  double lhs, rhs, residual;
};

/// int_0^inf e^{-t lambda} J_nu(r1 lambda) J_nu(r2 lambda) d lambda against
/// (1/pi) (r1 r2)^{-1/2} Q_{nu-1/2}((r1^2 + r2^2 + t^2) / (2 r1 r2)).
inline LipschitzHankelResult verify_lipschitz_hankel(double nu, double r1, double r2, double t) {
  if (!(t > 0.0) || !(r1 > 0.0) || !(r2 > 0.0)) {
    throw Error(ErrorKind::DomainError, "kernel", "Lipschitz-Hankel check needs r1, r2, t > 0");
  }
  const BesselOrder order(nu);
  auto integrand = [&](double lambda) {
    return std::exp(-t * lambda) * specfun::bessel_j(order, r1 * lambda) * specfun::bessel_j(order, r2 * lambda);
  };
  const double lhs = quad::integrate_decaying(integrand, 0.0, 1e-11, t).value;
  const double z = (r1 * r1 + r2 * r2 + t * t) / (2.0 * r1 * r2);
  const double rhs = specfun::legendre_q_shifted(order, z) / (std::numbers::pi * std::sqrt(r1 * r2));
  return {lhs, rhs, std::abs(lhs - rhs)};
}

}  // namespace diffract::kernel
