#pragma once

// Bicharacteristic flow of tau^2 - (xi^2 + |zeta|_k^2) / r^2 in b-coordinates, where xi is
// dual to r d/dr. Two parametrizations are provided: the "full" field (half the Hamilton
// vector field, singular at r = 0) and the "rescaled" field, r^2 times the full one, which
// extends smoothly to r = 0 and has a radial point at r = 0, xi = 0, zeta = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "diffract/error.hpp"

namespace diffract::geodesic {

inline constexpr double r_floor = 1e-12;
inline constexpr double origin_threshold = 1e-6;

struct FlowState {
  double t = 0.0;
  double r = 1.0;
  std::array<double, 2> theta{};
  double tau = 1.0;
  double xi = 0.0;
  std::array<double, 2> zeta{};
};

inline FlowState& operator+=(FlowState& a, const FlowState& b) {
  a.t += b.t;
  a.r += b.r;
  a.tau += b.tau;
  a.xi += b.xi;
  for (int i = 0; i < 2; ++i) {
    a.theta[i] += b.theta[i];
    a.zeta[i] += b.zeta[i];
  }
  return a;
}

inline FlowState operator*(double c, FlowState a) {
  a.t *= c;
  a.r *= c;
  a.tau *= c;
  a.xi *= c;
  for (int i = 0; i < 2; ++i) {
    a.theta[i] *= c;
    a.zeta[i] *= c;
  }
  return a;
}

inline FlowState operator+(FlowState a, const FlowState& b) { return a += b; }

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Inverse metric k^{ij} of the base sphere in a chart, with its coordinate derivatives.
class SphereMetric {
 public:
  virtual ~SphereMetric() = default;
  virtual int dim() const = 0;
  virtual Mat2 k_inv(const std::array<double, 2>& theta) const = 0;
  /// d k^{ij} / d theta_l.
  virtual Mat2 dk_inv(const std::array<double, 2>& theta, int l) const = 0;
  virtual std::string name() const = 0;
};

/// S^1 with the angle chart: k = 1.
class Circle final : public SphereMetric {
 public:
  int dim() const override { return 1; }
  Mat2 k_inv(const std::array<double, 2>&) const override { return {{{1.0, 0.0}, {0.0, 0.0}}}; }
  Mat2 dk_inv(const std::array<double, 2>&, int) const override { return {}; }
  std::string name() const override { return "circle"; }
};

/// Round S^2 in polar chart (polar angle theta_0, azimuth theta_1); valid away from the poles.
class RoundS2 final : public SphereMetric {
 public:
  int dim() const override { return 2; }
  Mat2 k_inv(const std::array<double, 2>& th) const override {
    const double s = std::sin(th[0]);
    check_chart(s);
    return {{{1.0, 0.0}, {0.0, 1.0 / (s * s)}}};
  }
  Mat2 dk_inv(const std::array<double, 2>& th, int l) const override {
    if (l != 0) return {};
    const double s = std::sin(th[0]);
    check_chart(s);
    return {{{0.0, 0.0}, {0.0, -2.0 * std::cos(th[0]) / (s * s * s)}}};
  }
  std::string name() const override { return "s2"; }

 private:
  static void check_chart(double s) {
    if (std::abs(s) < 1e-8) throw Error(ErrorKind::DomainError, "geodesic", "polar chart evaluated at a pole");
  }
};

inline double zeta_norm_sq(const FlowState& s, const SphereMetric& g) {
  const Mat2 k = g.k_inv(s.theta);
  double q = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    for (int j = 0; j < g.dim(); ++j) q += s.zeta[i] * k[i][j] * s.zeta[j];
  }
  return q;
}

/// Characteristic value tau^2 - (xi^2 + |zeta|_k^2) / r^2.
inline double sigma(const FlowState& s, const SphereMetric& g) {
  return s.tau * s.tau - (s.xi * s.xi + zeta_norm_sq(s, g)) / (s.r * s.r);
}

namespace detail {

// r^2 times the full field; regular everywhere.
inline FlowState scaled_field(const FlowState& s, const SphereMetric& g) {
  const int d = g.dim();
  const Mat2 k = g.k_inv(s.theta);
  FlowState out;
  out.t = s.r * s.r * s.tau;
  out.r = -s.r * s.xi;
  out.tau = 0.0;
  out.xi = -(s.xi * s.xi + zeta_norm_sq(s, g));
  for (int i = 0; i < d; ++i) {
    double v = 0.0;
    for (int j = 0; j < d; ++j) v += k[i][j] * s.zeta[j];
    out.theta[i] = -v;
  }
  for (int l = 0; l < d; ++l) {
    const Mat2 dk = g.dk_inv(s.theta, l);
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) q += s.zeta[i] * dk[i][j] * s.zeta[j];
    }
    out.zeta[l] = 0.5 * q;
  }
  return out;
}

}  // namespace detail

/// Half the Hamilton field: t' = tau, r' = -xi/r, theta' = -k zeta / r^2,
/// xi' = -(xi^2 + |zeta|^2) / r^2, zeta_l' = (1/2) zeta d_l k zeta / r^2.
inline FlowState hamilton_rhs(const FlowState& s, const SphereMetric& g) {
  if (!(s.r > r_floor)) {
    throw Error(ErrorKind::OriginSingularity, "geodesic", "full Hamilton field evaluated at r = " + std::to_string(s.r));
  }
  return (1.0 / (s.r * s.r)) * detail::scaled_field(s, g);
}

inline FlowState rescaled_rhs(const FlowState& s, const SphereMetric& g) { return detail::scaled_field(s, g); }

enum class FlowSystem { full, rescaled };
enum class FlowStatus { completed, origin_reached };

inline FlowState flow_rhs(const FlowState& s, const SphereMetric& g, FlowSystem system) {
  return system == FlowSystem::full ? hamilton_rhs(s, g) : rescaled_rhs(s, g);
}

struct Trajectory {
  FlowSystem system = FlowSystem::full;
  FlowStatus status = FlowStatus::completed;
  std::vector<double> s;
  std::vector<FlowState> states;
  std::vector<double> sigma;     // characteristic value at each state (NaN at r = 0)
  std::vector<double> zeta_norm; // |zeta|_k at each state
  std::size_t halvings = 0;

  double min_r() const {
    double m = states.front().r;
    for (const auto& st : states) m = std::min(m, st.r);
    return m;
  }
  double max_sigma_drift() const {
    double d = 0.0;
    for (double v : sigma) {
      if (std::isfinite(v)) d = std::max(d, std::abs(v - sigma.front()));
    }
    return d;
  }
  double max_tau_drift() const {
    double d = 0.0;
    for (const auto& st : states) d = std::max(d, std::abs(st.tau - states.front().tau));
    return d;
  }
};

struct FlowOptions {
  double max_relative_change = 0.05;  // per-step bound on |dr|/r and |dxi|/scale
  int max_halvings = 48;
};

inline FlowState rk4_step(const FlowState& y, double h, const SphereMetric& g, FlowSystem system) {
  const FlowState k1 = flow_rhs(y, g, system);
  const FlowState k2 = flow_rhs(y + (0.5 * h) * k1, g, system);
  const FlowState k3 = flow_rhs(y + (0.5 * h) * k2, g, system);
  const FlowState k4 = flow_rhs(y + h * k3, g, system);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Classical RK4 with the nominal step, halved locally where r or xi would change too fast.
/// Stops with origin_reached once r < 1e-6.
inline Trajectory integrate_flow(const FlowState& s0, const SphereMetric& g, double s_span, double step,
                                 FlowSystem system, const FlowOptions& opt = {}) {
  if (!(step > 0.0) || !(s_span >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "geodesic", "integrate_flow needs step > 0 and s_span >= 0");
  }
  if (!(s0.r >= 0.0) || (system == FlowSystem::full && !(s0.r > r_floor))) {
    throw Error(ErrorKind::OriginSingularity, "geodesic", "initial radius outside the system's domain");
  }
  Trajectory tr;
  tr.system = system;
  auto record = [&](double s, const FlowState& st) {
    tr.s.push_back(s);
    tr.states.push_back(st);
    tr.sigma.push_back(st.r > 0.0 ? sigma(st, g) : std::nan(""));
    tr.zeta_norm.push_back(std::sqrt(zeta_norm_sq(st, g)));
  };
  record(0.0, s0);
  if (s0.r < origin_threshold) {
    tr.status = FlowStatus::origin_reached;
    return tr;
  }

  FlowState y = s0;
  double s = 0.0;
  const auto acceptable = [&](const FlowState& y0, const FlowState& y1) {
    if (!std::isfinite(y1.r) || !std::isfinite(y1.xi) || !std::isfinite(y1.t) || !(y1.r >= 0.0)) return false;
    const double c = opt.max_relative_change;
    const double scale = std::max({std::abs(y0.xi), std::sqrt(zeta_norm_sq(y0, g)), y0.r * std::abs(y0.tau), 1e-300});
    return std::abs(y1.r - y0.r) <= c * y0.r && std::abs(y1.xi - y0.xi) <= c * scale;
  };

  while (s < s_span) {
    double h = std::min(step, s_span - s);
    if (s + h >= s_span * (1.0 - 1e-14)) h = s_span - s;
    FlowState next;
    int k = 0;
    for (;; ++k) {
      bool ok = false;
      try {
        next = rk4_step(y, h, g, system);
        ok = acceptable(y, next);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OriginSingularity) throw;
      }
      if (ok) break;
      if (k == opt.max_halvings) {
        throw Error(ErrorKind::StepUnderflow, "geodesic",
                    "step halved " + std::to_string(k) + " times at s = " + std::to_string(s));
      }
      h *= 0.5;
    }
    tr.halvings += static_cast<std::size_t>(k);
    s += h;
    y = next;
    record(s, y);
    if (y.r < origin_threshold) {
      tr.status = FlowStatus::origin_reached;
      break;
    }
  }
  return tr;
}

struct ProfilePoint {
  double s;
  double xi_hat;
  double sigma_hat;  // r^2 - xi_hat^2 - |zeta_hat|^2
};

/// The propagating variable xi/tau along a trajectory, with the rescaled characteristic defect.
inline std::vector<ProfilePoint> xi_hat_profile(const Trajectory& tr) {
  std::vector<ProfilePoint> out;
  out.reserve(tr.states.size());
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const FlowState& st = tr.states[i];
    const double xh = st.xi / st.tau, zh = tr.zeta_norm[i] / st.tau;
    out.push_back({tr.s[i], xh, st.r * st.r - xh * xh - zh * zh});
  }
  return out;
}

/// Closed-form rescaled radial motion for |zeta|_k = z > 0:
/// r = e^{-c2} sec(z (s - c1)), xi = -z tan(z (s - c1)).
struct SecTanSolution {
  double zeta_norm = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double r(double s) const { return std::exp(-c2) / std::cos(zeta_norm * (s - c1)); }
  double xi(double s) const { return -zeta_norm * std::tan(zeta_norm * (s - c1)); }
  double dr(double s) const { return r(s) * std::tan(zeta_norm * (s - c1)) * zeta_norm; }
  double dxi(double s) const {
    const double c = std::cos(zeta_norm * (s - c1));
    return -zeta_norm * zeta_norm / (c * c);
  }
  /// e^{-c2}: the smallest radius on the trajectory.
  double envelope() const { return std::exp(-c2); }

  static SecTanSolution through(double r0, double xi0, double z) {
    SecTanSolution sol;
    sol.zeta_norm = z;
    sol.c1 = std::atan(xi0 / z) / z;  // xi0 = -z tan(-z c1)
    sol.c2 = -std::log(r0 * z / std::hypot(z, xi0));
    return sol;
  }
};

/// A unit-speed Euclidean line in the plane, lifted to the characteristic set:
/// r(t)^2 = b^2 + (t - t*)^2, xi_hat = t* - t, zeta = -/+ tau b, theta increasing by atan.
struct StraightLine {
  double impact = 0.0;  // b >= 0
  double t_star = 0.0;  // time of closest approach
  double theta_star = 0.0;
  double tau = 1.0;
  int orientation = 1;  // +1: theta increases with t

  double r(double t) const { return std::hypot(impact, t - t_star); }
  double xi_hat(double t) const { return t_star - t; }
  double zeta() const { return -orientation * tau * impact; }
  double theta(double t) const {
    return impact > 0.0 ? theta_star + orientation * std::atan((t - t_star) / impact) : theta_star;
  }
  FlowState state(double t) const {
    FlowState s;
    s.t = t;
    s.r = r(t);
    s.theta = {theta(t), 0.0};
    s.tau = tau;
    s.xi = tau * xi_hat(t);
    s.zeta = {zeta(), 0.0};
    return s;
  }
};

/// Largest deviation of a circle-based trajectory from the straight line, matched at equal t.
inline double straight_line_deviation(const Trajectory& tr, const StraightLine& line) {
  double dev = 0.0;
  for (const auto& st : tr.states) {
    dev = std::max({dev, std::abs(st.r - line.r(st.t)), std::abs(st.xi / st.tau - line.xi_hat(st.t)),
                    std::abs(st.theta[0] - line.theta(st.t))});
  }
  return dev;
}

struct TrajectoryDistance {
  double distance = 0.0;  // sup over both directions of matched-point distances
  std::size_t compared = 0;
};

/// Distance between two trajectories of the same orbit, restricted to r > r_min.
/// t is strictly monotone along both parametrizations (t' = tau or r^2 tau), so each point of
/// one trajectory is matched with the point of the other at the same t via cubic Hermite
/// interpolation in t. The sup of these matched distances bounds the Hausdorff distance.
inline TrajectoryDistance matched_distance(const Trajectory& a, const Trajectory& b, const SphereMetric& g,
                                           double r_min) {
  const int d = g.dim();
  auto coords = [&](const FlowState& s) {
    std::vector<double> v = {s.t, s.r, s.xi};
    for (int i = 0; i < d; ++i) {
      v.push_back(s.theta[i]);
      v.push_back(s.zeta[i]);
    }
    return v;
  };
  auto directed = [&](const Trajectory& from, const Trajectory& to, TrajectoryDistance& out) {
    std::size_t j = 0;
    for (const auto& st : from.states) {
      if (!(st.r > r_min)) continue;
      while (j + 1 < to.states.size() && to.states[j + 1].t < st.t) ++j;
      if (j + 1 >= to.states.size() || to.states[j].t > st.t) continue;
      const FlowState& p0 = to.states[j];
      const FlowState& p1 = to.states[j + 1];
      if (!(p0.r > r_min && p1.r > r_min)) continue;
      const FlowState f0 = rescaled_rhs(p0, g), f1 = rescaled_rhs(p1, g);
      const double h = p1.t - p0.t, u = (st.t - p0.t) / h;
      const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
      const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
      const auto x0 = coords(p0), x1 = coords(p1), m0 = coords(f0), m1 = coords(f1), x = coords(st);
      double dist2 = 0.0;
      for (std::size_t c = 1; c < x.size(); ++c) {
        // Derivatives with respect to t are the field divided by its t component.
        const double interp = h00 * x0[c] + h10 * h * m0[c] / m0[0] + h01 * x1[c] + h11 * h * m1[c] / m1[0];
        dist2 += (x[c] - interp) * (x[c] - interp);
      }
      out.distance = std::max(out.distance, std::sqrt(dist2));
      ++out.compared;
    }
  };
  TrajectoryDistance out;
  directed(a, b, out);
  directed(b, a, out);
  return out;
}

inline std::unique_ptr<SphereMetric> make_metric(const std::string& name) {
  if (name == "circle") return std::make_unique<Circle>();
  if (name == "s2") return std::make_unique<RoundS2>();
  throw Error(ErrorKind::InvalidArgument, "geodesic", "unknown base metric '" + name + "'");
}

}  // namespace diffract::geodesic
