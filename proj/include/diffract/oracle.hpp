#pragma once

// Finite-difference solver for one angular mode,
//   u_tt = u_rr + u_r / r - nu^2 u / r^2,  u(., 0) = 0,  u_t(., 0) = psi,
// with psi a Gaussian of width sigma around r0 normalized so that int psi r dr = 1.
//
// The solver works with v = r^{-nu} u, which satisfies v_tt = r^{-p} (r^p v_r)_r
// with p = 2 nu + 1. Regular solutions behave like u ~ r^nu at the origin, i.e.
// v is smooth and even, and the finite-volume form on cells [i dr, (i+1) dr]
// closes with zero flux through r = 0. Time stepping is leapfrog.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <vector>

#include "diffract/error.hpp"
#include "diffract/kernel.hpp"

namespace diffract::oracle {

/// Number of standard deviations kept on each side of the Gaussian source.
inline constexpr double mollifier_support_sigmas = 8.0;

struct FDConfig {
  double r_max = 4.0;
  double dr = 1e-3;
  double dt = 5e-4;
  double T = 2.5;
  double mollifier_width = 6e-3;  // Gaussian standard deviation
  double nu = 0.5;
  std::size_t slice_stride = 10;  // store u every slice_stride steps

  /// dt = dr / (2k) with the smallest integer k meeting the leapfrog bound near
  /// the origin (k = 1 for nu <= 1.5), and mollifier width 6 dr.
  static FDConfig standard(double nu, double dr, double T, double r_max) {
    FDConfig c;
    c.nu = nu;
    c.dr = dr;
    // Gershgorin bound of the operator: max(4, 2 (p + 1)) / dr^2 with p = 2 nu + 1.
    const double lam = std::max(4.0, 2.0 * (2.0 * nu + 2.0)) / (dr * dr);
    const double k = std::ceil(0.5 * dr * std::sqrt(lam) / (2.0 * 0.95));
    c.dt = 0.5 * dr / std::max(1.0, k);
    c.T = T;
    c.r_max = r_max;
    c.mollifier_width = 6.0 * dr;
    return c;
  }

  void validate() const {
    if (!(dr > 0.0) || !(dt > 0.0) || !(T > 0.0) || !(r_max > 0.0) || !(nu >= 0.0) || slice_stride == 0) {
      throw Error(ErrorKind::InvalidArgument, "oracle", "FD config needs positive dr, dt, T, r_max and nu >= 0");
    }
    if (dt > 0.9 * dr) {
      std::ostringstream os;
      os << "dt = " << dt << " exceeds 0.9 dr = " << 0.9 * dr;
      throw Error(ErrorKind::CFLViolation, "oracle", os.str());
    }
    if (mollifier_width < 4.0 * dr * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "mollifier width " << mollifier_width << " is below 4 dr = " << 4.0 * dr;
      throw Error(ErrorKind::InvalidArgument, "oracle", os.str());
    }
  }
};

/// Gaussian source normalized against r dr on (0, inf).
struct Mollifier {
  double r0, sigma, scale;

  Mollifier(double r0_, double sigma_) : r0(r0_), sigma(sigma_) {
    const double z = r0 / (sigma * std::numbers::sqrt2);
    const double mass = sigma * sigma * std::exp(-z * z) +
                        r0 * sigma * std::sqrt(0.5 * std::numbers::pi) * (1.0 + std::erf(z));
    scale = 1.0 / mass;
  }
  double support() const { return mollifier_support_sigmas * sigma; }
  double operator()(double r) const {
    const double x = (r - r0) / sigma;
    if (std::abs(x) > mollifier_support_sigmas) return 0.0;
    return scale * std::exp(-0.5 * x * x);
  }
};

struct ModeSolution {
  std::vector<double> r;                    // cell centres (i + 1/2) dr
  double slice_dt = 0.0;                    // time between stored slices
  std::vector<std::vector<double>> slices;  // u at t = k slice_dt
  std::vector<double> energy;               // discrete energy at each slice
  double peak = 0.0;                        // max |u| over stored slices

  double max_energy_drift() const {
    double drift = 0.0;
    if (energy.empty() || energy.front() == 0.0) return 0.0;
    for (double e : energy) drift = std::max(drift, std::abs(e - energy.front()) / std::abs(energy.front()));
    return drift;
  }

  /// u(r, t): cubic Lagrange in r, linear in t between stored slices.
  double value(double rr, double t) const {
    const double dr = r[1] - r[0];
    const double t_max = slice_dt * static_cast<double>(slices.size() - 1);
    if (!(t >= 0.0) || t > t_max * (1.0 + 1e-12) || !(rr >= r.front()) || !(rr <= r.back())) {
      std::ostringstream os;
      os << "requested (r=" << rr << ", t=" << t << ") outside the computed domain";
      throw Error(ErrorKind::InvalidArgument, "oracle", os.str());
    }
    const double pos = std::min(t / slice_dt, static_cast<double>(slices.size() - 1));
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= slices.size()) k = slices.size() - 2;
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * spatial(slices[k], rr, dr) + w * spatial(slices[k + 1], rr, dr);
  }

 private:
  double spatial(const std::vector<double>& u, double rr, double dr) const {
    const double x = (rr - r.front()) / dr;
    auto i = static_cast<std::ptrdiff_t>(std::floor(x)) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(u.size()) - 4);
    double sum = 0.0;
    for (std::ptrdiff_t j = 0; j < 4; ++j) {
      double l = 1.0;
      for (std::ptrdiff_t m = 0; m < 4; ++m) {
        if (m != j) l *= (x - static_cast<double>(i + m)) / static_cast<double>(j - m);
      }
      sum += l * u[static_cast<std::size_t>(i + j)];
    }
    return sum;
  }
};

namespace detail {

// Finite-volume operator for v_tt = r^{-p} (r^p v_r)_r on cells [i dr, (i+1) dr].
struct RadialFV {
  std::vector<double> up, down;  // coupling to cell i+1 and i-1
  std::vector<double> volume;    // int_cell r^p dr / r_{i+1/2}^p

  RadialFV(std::size_t n, double dr, double p) : up(n), down(n), volume(n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ro = dr * static_cast<double>(i + 1), ri = dr * static_cast<double>(i);
      const double q = ri / ro;
      // V_i = r_o^{p+1} (1 - q^{p+1}) / (p + 1); coefficients r_o^p / (dr V_i), r_i^p / (dr V_i).
      const double vol_over_rop = ro * (1.0 - std::pow(q, p + 1.0)) / (p + 1.0);
      up[i] = (i + 1 < n) ? 1.0 / (dr * vol_over_rop) : 0.0;  // wall at r_max
      down[i] = (i > 0) ? std::pow(q, p) / (dr * vol_over_rop) : 0.0;
      volume[i] = vol_over_rop;
    }
  }

  double lambda_bound() const {
    double b = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) b = std::max(b, 2.0 * (up[i] + down[i]));
    return b;
  }

  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      if (i + 1 < n) acc += up[i] * (v[i + 1] - v[i]);
      if (i > 0) acc -= down[i] * (v[i] - v[i - 1]);
      out[i] = acc;
    }
  }
};

}  // namespace detail

/// Leapfrog solve with source at r0; `amplitude` scales the initial velocity.
inline ModeSolution solve_mode(const FDConfig& cfg, double r0, double amplitude = 1.0) {
  cfg.validate();
  const Mollifier psi(r0, cfg.mollifier_width);
  if (!(r0 > 4.0 * cfg.mollifier_width) || !(r0 - psi.support() > 0.0)) {
    std::ostringstream os;
    os << "source r0 = " << r0 << " too close to the origin for mollifier width " << cfg.mollifier_width;
    throw Error(ErrorKind::InvalidArgument, "oracle", os.str());
  }
  if (!(r0 + psi.support() + cfg.T < cfg.r_max)) {
    std::ostringstream os;
    os << "wave reaches r_max = " << cfg.r_max << " before T = " << cfg.T << " (source " << r0 << ")";
    throw Error(ErrorKind::BoundaryContamination, "oracle", os.str());
  }
  const auto n = static_cast<std::size_t>(std::llround(cfg.r_max / cfg.dr));
  const double p = 2.0 * cfg.nu + 1.0;
  const detail::RadialFV op(n, cfg.dr, p);
  const double lam = op.lambda_bound();
  if (cfg.dt * cfg.dt * lam > 4.0) {
    std::ostringstream os;
    os << "dt = " << cfg.dt << " exceeds the leapfrog bound " << 2.0 / std::sqrt(lam) << " for nu = " << cfg.nu;
    throw Error(ErrorKind::CFLViolation, "oracle", os.str());
  }

  ModeSolution sol;
  sol.r.resize(n);
  std::vector<double> rnu(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.r[i] = cfg.dr * (static_cast<double>(i) + 0.5);
    rnu[i] = std::pow(sol.r[i], cfg.nu);
  }
  std::vector<double> psi_v(n);
  for (std::size_t i = 0; i < n; ++i) psi_v[i] = amplitude * psi(sol.r[i]) / rnu[i];

  const double dt = cfg.dt;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.T / dt - 1e-9));
  sol.slice_dt = dt * static_cast<double>(cfg.slice_stride);

  // Energy in v variables; the weight r^p is carried relative to the face power
  // to stay finite for large nu. Only drift ratios are reported, so a common
  // factor is harmless.
  const double ref = std::pow(cfg.dr * static_cast<double>(n), p);
  std::vector<double> w_cell(n), w_face(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ro = cfg.dr * static_cast<double>(i + 1);
    w_cell[i] = op.volume[i] * (std::pow(ro, p) / ref);
    w_face[i] = std::pow(ro, p) / ref;
  }
  auto energy = [&](const std::vector<double>& a, const std::vector<double>& b) {
    // Staggered leapfrog energy between levels a (k) and b (k + 1).
    double kin = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double vt = (b[i] - a[i]) / dt;
      kin += w_cell[i] * vt * vt;
      if (i + 1 < n) pot += w_face[i] * (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / cfg.dr;
    }
    return 0.5 * (kin + pot);
  };
  auto store = [&](const std::vector<double>& v) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = rnu[i] * v[i];
      sol.peak = std::max(sol.peak, std::abs(u[i]));
    }
    sol.slices.push_back(std::move(u));
  };

  std::vector<double> prev(n, 0.0), cur(n), next(n), lv(n);
  op.apply(psi_v, lv);
  for (std::size_t i = 0; i < n; ++i) cur[i] = dt * psi_v[i] + dt * dt * dt / 6.0 * lv[i];
  store(prev);
  sol.energy.push_back(energy(prev, cur));
  for (std::size_t k = 1; k <= steps; ++k) {
    const bool slice = k % cfg.slice_stride == 0;
    if (slice) store(cur);
    if (k == steps) break;
    op.apply(cur, lv);
    for (std::size_t i = 0; i < n; ++i) next[i] = 2.0 * cur[i] - prev[i] + dt * dt * lv[i];
    if (slice) sol.energy.push_back(energy(cur, next));
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return sol;
}

struct PointError {
  double r1, t;
  kernel::Region region;
  double analytic, numeric, rel_err;
};

struct ErrorReport {
  std::vector<PointError> points;
  double max_rel = 0.0;
  double mean_rel = 0.0;
};

/// Analytic kernel convolved in r2 with the source mollifier:
/// int K(r1, s, t) psi(s) s ds by composite midpoint rule, split at cone crossings.
inline double mollified_kernel(const kernel::ModeParams& m, const Mollifier& psi, double r1, double t,
                               std::size_t panels = 400) {
  const double lo = psi.r0 - psi.support(), hi = psi.r0 + psi.support();
  std::vector<double> cuts = {lo, hi};
  for (double c : {r1 - t, r1 + t, t - r1}) {
    if (c > lo && c < hi) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double a = cuts[j], b = cuts[j + 1];
    const auto count = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::ceil(static_cast<double>(panels) * (b - a) / (hi - lo))));
    const double h = (b - a) / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double s = a + (static_cast<double>(i) + 0.5) * h;
      const kernel::KernelPoint kp(r1, s, t);
      const double eps = std::min(kernel::default_eps_cone(kp), 1e-3 * h);
      sum += h * kernel::mode_kernel(m, kp, eps) * psi(s) * s;
    }
  }
  return sum;
}

/// Relative error against the mode's characteristic amplitude: the analytic
/// value or (1/2)(r1 r2)^{-1/2}, whichever is larger in magnitude.
inline double relative_error(double numeric, double analytic, double r1, double r2) {
  const double floor = 0.5 / std::sqrt(r1 * r2);
  return std::abs(numeric - analytic) / std::max(std::abs(analytic), floor);
}

/// FD solution with source at r2 (common to all points) against the mollified kernel.
inline ErrorReport compare_kernel(const kernel::ModeParams& m, const FDConfig& cfg,
                                  const std::vector<kernel::KernelPoint>& sample_points) {
  if (sample_points.empty()) throw Error(ErrorKind::InvalidArgument, "oracle", "no sample points");
  if (std::abs(cfg.nu - m.nu) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "oracle", "FD config order differs from the mode's nu");
  }
  const double r2 = sample_points.front().r2;
  for (const auto& p : sample_points) {
    if (p.r2 != r2) throw Error(ErrorKind::InvalidArgument, "oracle", "sample points must share the source r2");
    const double gap = std::min({std::abs(p.t - std::abs(p.r1 - p.r2)), std::abs(p.t - (p.r1 + p.r2))});
    if (gap < 3.0 * cfg.mollifier_width) {
      std::ostringstream os;
      os << "sample point (r1=" << p.r1 << ", t=" << p.t << ") is within 3 mollifier widths of a cone";
      throw Error(ErrorKind::ConeProximity, "oracle", os.str());
    }
    if (p.t > cfg.T) throw Error(ErrorKind::InvalidArgument, "oracle", "sample time beyond the solve horizon");
  }
  const ModeSolution sol = solve_mode(cfg, r2);
  const Mollifier psi(r2, cfg.mollifier_width);
  ErrorReport rep;
  for (const auto& p : sample_points) {
    PointError e{p.r1, p.t, kernel::classify_region(p), 0.0, 0.0, 0.0};
    e.analytic = mollified_kernel(m, psi, p.r1, p.t);
    e.numeric = sol.value(p.r1, p.t);
    e.rel_err = relative_error(e.numeric, e.analytic, p.r1, p.r2);
    rep.max_rel = std::max(rep.max_rel, e.rel_err);
    rep.mean_rel += e.rel_err;
    rep.points.push_back(e);
  }
  rep.mean_rel /= static_cast<double>(rep.points.size());
  return rep;
}

/// Bound on the region I value of the mollified solution at distance d beyond
/// the main cone: amplitude times the Gaussian tail mass beyond d.
inline double leakage_bound(double amplitude, double distance, double sigma) {
  if (distance >= mollifier_support_sigmas * sigma) return 1e-12 * amplitude;
  return amplitude * 0.5 * std::erfc(distance / (sigma * std::numbers::sqrt2)) + 1e-12 * amplitude;
}

struct ConvergenceStudy {
  std::vector<double> dr;
  std::vector<double> max_abs_error;
  std::vector<double> orders;  // log2 of successive error ratios (for halving dr)
};

/// Max-abs FD error against the mollified kernel for each dr, at a fixed
/// mollifier width so that only the discretization changes.
inline ConvergenceStudy convergence_study(const kernel::ModeParams& m, double r0, double sigma, double T,
                                          double r_max, const std::vector<kernel::KernelPoint>& points,
                                          const std::vector<double>& drs) {
  ConvergenceStudy study;
  const Mollifier psi(r0, sigma);
  std::vector<double> analytic;
  for (const auto& p : points) analytic.push_back(mollified_kernel(m, psi, p.r1, p.t));
  for (double dr : drs) {
    FDConfig cfg = FDConfig::standard(m.nu, dr, T, r_max);
    cfg.mollifier_width = sigma;
    const ModeSolution sol = solve_mode(cfg, r0);
    double err = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      err = std::max(err, std::abs(sol.value(points[i].r1, points[i].t) - analytic[i]));
    }
    study.dr.push_back(dr);
    study.max_abs_error.push_back(err);
  }
  for (std::size_t i = 1; i < drs.size(); ++i) {
    study.orders.push_back(std::log(study.max_abs_error[i - 1] / study.max_abs_error[i]) / std::log(drs[i - 1] / drs[i]));
  }
  return study;
}

}  // namespace diffract::oracle
