#pragma once

// Inequality layer: Hardy's inequality, the quadratic form with an r^{-2} potential and its
// equivalence with the Dirichlet form, and the sign structure of a commutant symbol under the
// Hamilton field of the wave operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "diffract/error.hpp"
#include "diffract/geodesic.hpp"
#include "diffract/quadrature.hpp"

namespace diffract::energy {

// ---------------------------------------------------------------------------------------------
// Cutoffs built from the squared bump exp(-1/(1 - y^2)).

namespace detail {

inline double bump_sq(double y) { return (y > -1.0 && y < 1.0) ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }

/// F(y) = int_{-1}^{y} bump_sq, tabulated on a uniform grid with a 10-point Gauss rule per cell.
class BumpPrimitive {
 public:
  static constexpr int cells = 1024;

  BumpPrimitive() : gl_(10), cum_(cells + 1, 0.0) {
    for (int k = 0; k < cells; ++k) cum_[k + 1] = cum_[k] + gl_.integrate(bump_sq, node(k), node(k + 1));
  }
  double total() const { return cum_.back(); }
  double operator()(double y) const {
    if (y <= -1.0) return 0.0;
    if (y >= 1.0) return total();
    const int k = std::min(cells - 1, static_cast<int>((y + 1.0) / h_));
    return cum_[k] + gl_.integrate(bump_sq, node(k), y);
  }

 private:
  static constexpr double h_ = 2.0 / cells;
  static double node(int k) { return -1.0 + k * h_; }
  quad::GaussLegendre gl_;
  std::vector<double> cum_;
};

inline const BumpPrimitive& primitive() {
  static const BumpPrimitive p;
  return p;
}

}  // namespace detail

/// chi: 1 on [-1, 1], 0 off (-2, 2), chi' = phi1^2 - phi2^2.
/// chi_tilde: 0 on (-inf, 0], 1 on [1, inf), chi_tilde' = phi3^2.
/// Each phi is c * exp(-1/(2(1 - y^2))) at y = 2x + 3, 2x - 3, 2x - 1, with c^2 = 2 / int bump_sq.
struct Cutoffs {
  static double norm_sq() { return 2.0 / detail::primitive().total(); }
  static double psi(double y) { return (y > -1.0 && y < 1.0) ? std::exp(-0.5 / (1.0 - y * y)) : 0.0; }
  static double phi1(double x) { return std::sqrt(norm_sq()) * psi(2.0 * x + 3.0); }
  static double phi2(double x) { return std::sqrt(norm_sq()) * psi(2.0 * x - 3.0); }
  static double phi3(double x) { return std::sqrt(norm_sq()) * psi(2.0 * x - 1.0); }

  static double chi(double x) {
    const auto& F = detail::primitive();
    if (x >= -1.0 && x <= 1.0) return 1.0;
    return (F(2.0 * x + 3.0) - F(2.0 * x - 3.0)) / F.total();
  }
  static double chi_prime(double x) {
    return norm_sq() * (detail::bump_sq(2.0 * x + 3.0) - detail::bump_sq(2.0 * x - 3.0));
  }
  static double chi_tilde(double x) {
    const auto& F = detail::primitive();
    return F(2.0 * x - 1.0) / F.total();
  }
  static double chi_tilde_prime(double x) { return norm_sq() * detail::bump_sq(2.0 * x - 1.0); }
};

// ---------------------------------------------------------------------------------------------
// Test functions u(x) = sum_k c_k R_k(r) P_k(omega) on R^n.

/// R(r) = r^m (1 + r^2)^{-p/2} e^{-g r^2} B(r / L) with B(x) = exp(1 - 1/(1 - x^2)) on [0, 1).
/// L = infinity drops the bump (then g > 0 is required for decay).
struct RadialProfile {
  int power = 1;
  double decay = 0.0;
  double support = 1.0;
  double gauss = 0.0;

  bool compact() const { return std::isfinite(support); }
  /// Radius beyond which the profile is zero or below e^{-45}.
  double extent() const { return compact() ? support : std::sqrt(45.0 / gauss); }

  double value(double r) const {
    const double x = compact() ? r / support : 0.0;
    if (!(x < 1.0)) return 0.0;
    return std::pow(r, power) * std::pow(1.0 + r * r, -0.5 * decay) * std::exp(-gauss * r * r) *
           std::exp(1.0 - 1.0 / (1.0 - x * x));
  }
  double derivative(double r) const {
    const double x = compact() ? r / support : 0.0;
    if (!(x < 1.0)) return 0.0;
    const double b = std::exp(1.0 - 1.0 / (1.0 - x * x));
    const double db = compact() ? -2.0 * x / ((1.0 - x * x) * (1.0 - x * x)) * b / support : 0.0;
    const double w = std::pow(1.0 + r * r, -0.5 * decay) * std::exp(-gauss * r * r);
    const double dw = (-decay * r / (1.0 + r * r) - 2.0 * gauss * r) * w;
    const double rm = std::pow(r, power);
    const double drm = power == 0 ? 0.0 : power * std::pow(r, power - 1);
    return (drm * w + rm * dw) * b + rm * w * db;
  }
};

/// P(omega) = c0 + a . omega + omega^T B omega (B symmetric), restricted to the unit sphere.
struct AngularPolynomial {
  double c0 = 1.0;
  std::vector<double> a;
  std::vector<std::vector<double>> b;

  static AngularPolynomial constant(int n, double c = 1.0) {
    AngularPolynomial p;
    p.c0 = c;
    p.a.assign(n, 0.0);
    p.b.assign(n, std::vector<double>(n, 0.0));
    return p;
  }
  double value(const std::vector<double>& w) const {
    double v = c0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      v += a[i] * w[i];
      for (std::size_t j = 0; j < a.size(); ++j) v += w[i] * b[i][j] * w[j];
    }
    return v;
  }
  /// Tangential gradient on the unit sphere.
  std::vector<double> grad(const std::vector<double>& w) const {
    const std::size_t n = a.size();
    std::vector<double> g(n);
    double radial = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = a[i];
      for (std::size_t j = 0; j < n; ++j) g[i] += 2.0 * b[i][j] * w[j];
      radial += g[i] * w[i];
    }
    for (std::size_t i = 0; i < n; ++i) g[i] -= radial * w[i];
    return g;
  }
};

struct TestTerm {
  double coeff = 1.0;
  RadialProfile radial;
  AngularPolynomial angular;
};

struct TestFunction {
  int n = 3;
  std::vector<TestTerm> terms;

  double support() const {
    double L = 0.0;
    for (const auto& t : terms) L = std::max(L, t.radial.extent());
    return L;
  }
  bool compact() const {
    for (const auto& t : terms) {
      if (!t.radial.compact()) return false;
    }
    return true;
  }
  bool vanishes_at_origin() const {
    for (const auto& t : terms) {
      if (t.radial.power < 1) return false;
    }
    return true;
  }
  double value(double r, const std::vector<double>& w) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.coeff * t.radial.value(r) * t.angular.value(w);
    return v;
  }
};

/// Radial test function approaching the Hardy extremal r^{-(n-2)/2} over [1, L].
inline TestFunction hardy_extremal_probe(int n, double L) {
  TestFunction u;
  u.n = n;
  u.terms.push_back({1.0, RadialProfile{1, 1.0 + 0.5 * (n - 2), L, 0.0}, AngularPolynomial::constant(n)});
  return u;
}

/// 1-3 separable terms with random radial scale, power and quadratic angular factor.
inline TestFunction random_test_function(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  TestFunction u;
  u.n = n;
  const int count = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < count; ++k) {
    TestTerm t;
    t.coeff = N(rng);
    t.radial.power = 1 + static_cast<int>(rng() % 2);
    t.radial.decay = 2.0 * U(rng);
    t.radial.support = 0.5 + 2.5 * U(rng);
    t.angular = AngularPolynomial::constant(n, N(rng));
    for (int i = 0; i < n; ++i) {
      t.angular.a[i] = 0.7 * N(rng);
      for (int j = 0; j <= i; ++j) t.angular.b[i][j] = t.angular.b[j][i] = 0.5 * N(rng);
    }
    u.terms.push_back(t);
  }
  return u;
}

inline std::vector<TestFunction> random_suite(int n, int count, std::uint64_t seed = 0x5EED) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(n));
  std::vector<TestFunction> out;
  for (int i = 0; i < count; ++i) out.push_back(random_test_function(n, rng));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Quadrature on S^{n-1} x (0, L).

/// Hyperspherical product rule. Each polar angle p carries the Jacobian sin^k p; in z = cos p
/// the weight is (1 - z^2)^{(k-1)/2}, integrated exactly for polynomials by Gauss-Legendre (k odd,
/// polynomial weight) or Chebyshev nodes of the second kind (k even). The azimuth uses the
/// trapezoid rule. Nodes are grouped by the first coordinate omega_1 = z so zonal integrands need
/// one evaluation per level.
class SphereQuadrature {
 public:
  struct Node {
    std::vector<double> omega;
    double weight;
    int level;
  };

  SphereQuadrature(int n, int polar_nodes = 8) : n_(n) {
    if (n < 2 || polar_nodes < 1) throw Error(ErrorKind::InvalidArgument, "energy", "sphere quadrature needs n >= 2");
    const int az = 2 * polar_nodes + 2;
    std::vector<Node> cur;
    for (int j = 0; j < az; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / az;
      cur.push_back({{std::cos(ph), std::sin(ph)}, 2.0 * std::numbers::pi / az, j});
    }
    for (int dim = 3; dim <= n; ++dim) {
      const auto [z, w] = polar_rule(dim - 2, polar_nodes);
      std::vector<Node> next;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
        for (const auto& nd : cur) {
          Node m;
          m.omega.push_back(z[i]);
          for (double c : nd.omega) m.omega.push_back(s * c);
          m.weight = w[i] * nd.weight;
          m.level = static_cast<int>(i);
          next.push_back(std::move(m));
        }
      }
      cur = std::move(next);
    }
    nodes_ = std::move(cur);
    int levels = 0;
    for (const auto& nd : nodes_) levels = std::max(levels, nd.level + 1);
    level_z_.assign(levels, 0.0);
    for (const auto& nd : nodes_) level_z_[nd.level] = nd.omega[0];
  }

  int n() const { return n_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<double>& level_z() const { return level_z_; }
  double area() const {
    double s = 0.0;
    for (const auto& nd : nodes_) s += nd.weight;
    return s;
  }

  /// Nodes z and weights for int_{-1}^{1} g(z) (1 - z^2)^{(k-1)/2} dz.
  static std::pair<std::vector<double>, std::vector<double>> polar_rule(int k, int m) {
    std::vector<double> z(m), w(m);
    if (k % 2 == 1) {
      const quad::GaussLegendre gl(m);
      for (int i = 0; i < m; ++i) {
        z[i] = gl.nodes[i];
        w[i] = gl.weights[i] * std::pow(1.0 - z[i] * z[i], (k - 1) / 2);
      }
    } else {
      for (int i = 0; i < m; ++i) {
        const double th = std::numbers::pi * (i + 1) / (m + 1);
        z[i] = std::cos(th);
        w[i] = std::numbers::pi / (m + 1) * std::sin(th) * std::sin(th) * std::pow(1.0 - z[i] * z[i], (k - 2) / 2);
      }
    }
    return {z, w};
  }

  /// Shared instance per (n, polar_nodes).
  static const SphereQuadrature& cached(int n, int polar_nodes = 8) {
    thread_local std::map<std::pair<int, int>, SphereQuadrature> cache;
    auto it = cache.find({n, polar_nodes});
    if (it == cache.end()) it = cache.emplace(std::make_pair(n, polar_nodes), SphereQuadrature(n, polar_nodes)).first;
    return it->second;
  }

 private:
  int n_;
  std::vector<Node> nodes_;
  std::vector<double> level_z_;
};

/// Potential f(r, omega_1) (zonal about the first axis) with its sup norm and pointwise lower bound.
struct PotentialProfile {
  std::function<double(double, double)> f;
  double sup_norm = 0.0;
  double lower_bound = 0.0;
  bool constant = false;
  std::string name;

  double operator()(double r, double z) const { return f(r, z); }

  static PotentialProfile constant_value(double c) {
    return {[c](double, double) { return c; }, std::abs(c), c, true, "const(" + std::to_string(c) + ")"};
  }
  static PotentialProfile zonal(std::function<double(double, double)> f, double sup, double lower, std::string name) {
    return {std::move(f), sup, lower, false, std::move(name)};
  }
};

inline double lambda_of(int n) { return 0.5 * (n - 2); }

struct FormIntegrals {
  double radial_grad = 0.0;   // int |d_r u|^2 dx
  double angular_grad = 0.0;  // int |grad_omega u|^2 / r^2 dx
  double u_over_r = 0.0;      // int |u|^2 / r^2 dx
  double potential = 0.0;     // int f |u|^2 / r^2 dx
  double error = 0.0;         // max estimated absolute error across the four
  double grad() const { return radial_grad + angular_grad; }
};

namespace detail {

inline FormIntegrals form_integrals_at(const TestFunction& u, const PotentialProfile* f, const SphereQuadrature& sq,
                                       int panels) {
  const int n = u.n;
  const std::size_t K = u.terms.size();
  const std::size_t levels = sq.level_z().size();
  // Angular Gram matrices, total and per level.
  std::vector<double> G(K * K, 0.0), D(K * K, 0.0), M(levels * K * K, 0.0);
  for (const auto& nd : sq.nodes()) {
    std::vector<double> pv(K);
    std::vector<std::vector<double>> gv(K);
    for (std::size_t k = 0; k < K; ++k) {
      pv[k] = u.terms[k].angular.value(nd.omega);
      gv[k] = u.terms[k].angular.grad(nd.omega);
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t l = 0; l < K; ++l) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += gv[k][i] * gv[l][i];
        G[k * K + l] += nd.weight * pv[k] * pv[l];
        D[k * K + l] += nd.weight * dot;
        M[(nd.level * K + k) * K + l] += nd.weight * pv[k] * pv[l];
      }
    }
  }
  // Radial composite Gauss-Legendre on geometric panels over [0, L].
  const double L = u.support();
  std::vector<double> breaks = {0.0};
  const double first = 1e-3 * L;
  const double ratio = std::pow(L / first, 1.0 / (panels - 1));
  for (int p = 0; p < panels; ++p) breaks.push_back(first * std::pow(ratio, p));
  breaks.back() = L;
  static const quad::GaussLegendre gl(8);

  FormIntegrals out;
  std::vector<double> R(K), dR(K);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double c = 0.5 * (breaks[p] + breaks[p + 1]), h = 0.5 * (breaks[p + 1] - breaks[p]);
    for (int i = 0; i < gl.size(); ++i) {
      const double r = c + h * gl.nodes[i], w = h * gl.weights[i];
      for (std::size_t k = 0; k < K; ++k) {
        R[k] = u.terms[k].coeff * u.terms[k].radial.value(r);
        dR[k] = u.terms[k].coeff * u.terms[k].radial.derivative(r);
      }
      const double jn1 = std::pow(r, n - 1), jn3 = std::pow(r, n - 3);
      double rr = 0.0, dd = 0.0, ang = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = 0; l < K; ++l) {
          rr += R[k] * R[l] * G[k * K + l];
          ang += R[k] * R[l] * D[k * K + l];
          dd += dR[k] * dR[l] * G[k * K + l];
        }
      }
      out.radial_grad += w * jn1 * dd;
      out.u_over_r += w * jn3 * rr;
      out.angular_grad += w * jn3 * ang;
      if (f != nullptr) {
        double pot = 0.0;
        if (f->constant) {
          pot = (*f)(r, 0.0) * rr;
        } else {
          for (std::size_t lv = 0; lv < levels; ++lv) {
            double m = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
              for (std::size_t l = 0; l < K; ++l) m += R[k] * R[l] * M[(lv * K + k) * K + l];
            }
            pot += (*f)(r, sq.level_z()[lv]) * m;
          }
        }
        out.potential += w * jn3 * pot;
      }
    }
  }
  return out;
}

}  // namespace detail

/// All form integrals by product quadrature; the error estimate compares against half the panels.
/// GridTolerance if an estimate exceeds 1% of its integral.
inline FormIntegrals form_integrals(const TestFunction& u, const PotentialProfile* f = nullptr, int panels = 64,
                                    int polar_nodes = 8) {
  if (u.terms.empty()) throw Error(ErrorKind::InvalidArgument, "energy", "empty test function");
  if (!(std::isfinite(u.support()) && u.support() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "energy", "test function needs compact support or Gaussian decay");
  }
  const SphereQuadrature& sq = SphereQuadrature::cached(u.n, polar_nodes);
  FormIntegrals fine = detail::form_integrals_at(u, f, sq, panels);
  const FormIntegrals coarse = detail::form_integrals_at(u, f, sq, panels / 2);
  const double e[4] = {std::abs(fine.radial_grad - coarse.radial_grad),
                       std::abs(fine.angular_grad - coarse.angular_grad), std::abs(fine.u_over_r - coarse.u_over_r),
                       std::abs(fine.potential - coarse.potential)};
  const double v[4] = {fine.radial_grad, fine.angular_grad, fine.u_over_r, fine.potential};
  for (int i = 0; i < 4; ++i) {
    fine.error = std::max(fine.error, e[i]);
    if (e[i] > 0.01 * std::abs(v[i]) && e[i] > 1e-14) {
      throw Error(ErrorKind::GridTolerance, "energy",
                  "quadrature error estimate " + std::to_string(e[i]) + " exceeds 1% of " + std::to_string(v[i]));
    }
  }
  return fine;
}

struct HardyResult {
  double lhs;    // int |u/r|^2
  double rhs;    // int |d_r u|^2
  double ratio;  // lhs / rhs
  double bound;  // (2/(n-2))^2
  double error;  // quadrature error allowance on the ratio
  bool holds;
};

inline HardyResult hardy_check(const TestFunction& u, int panels = 64) {
  if (u.n < 3) throw Error(ErrorKind::InvalidArgument, "energy", "Hardy's inequality needs n >= 3");
  if (!u.vanishes_at_origin()) throw Error(ErrorKind::InvalidArgument, "energy", "test function must vanish at 0");
  const FormIntegrals I = form_integrals(u, nullptr, panels);
  HardyResult h;
  h.lhs = I.u_over_r;
  h.rhs = I.radial_grad;
  h.ratio = h.lhs / h.rhs;
  h.bound = 4.0 / ((u.n - 2.0) * (u.n - 2.0));
  h.error = I.error / h.rhs * (1.0 + h.ratio);
  h.holds = h.ratio <= h.bound + 2.0 * h.error;
  return h;
}

/// Q(u) = int |grad u|^2 + f |u|^2 / r^2.
inline double quadratic_form(const TestFunction& u, const PotentialProfile& f, int panels = 64) {
  const FormIntegrals I = form_integrals(u, &f, panels);
  return I.grad() + I.potential;
}

// ---------------------------------------------------------------------------------------------
// Ground state of -Delta_{S^{n-1}} + f(r, .) + lambda^2 for zonal f.

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : off / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace detail

inline double smallest_tridiagonal_eigenvalue(const std::vector<double>& d, const std::vector<double>& e) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double rad = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i < e.size() ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - rad);
    hi = std::max(hi, d[i] + rad);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::sturm_count(d, e, mid) >= 1) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline double sphere_ground_fv(const PotentialProfile& f, int n, double r, int cells) {
  const int m = n - 2;
  const double h = std::numbers::pi / cells, lam2 = lambda_of(n) * lambda_of(n);
  std::vector<double> W(cells), d(cells), e(cells - 1);
  for (int i = 0; i < cells; ++i) W[i] = std::pow(std::sin((i + 0.5) * h), m);
  for (int i = 0; i < cells; ++i) {
    const double wl = i == 0 ? 0.0 : std::pow(std::sin(i * h), m);
    const double wr = i == cells - 1 ? 0.0 : std::pow(std::sin((i + 1) * h), m);
    d[i] = (wl + wr) / (h * h) / W[i] + f(r, std::cos((i + 0.5) * h)) + lam2;
    if (i + 1 < cells) e[i] = -wr / (h * h) / std::sqrt(W[i] * W[i + 1]);
  }
  return smallest_tridiagonal_eigenvalue(d, e);
}

}  // namespace detail

/// The ground state of a zonal potential is zonal, so the sphere problem reduces to
/// -(sin^m g')' / sin^m + (f + lambda^2) g = mu g on (0, pi), m = n - 2, discretized by
/// cell-centred finite volumes (second order) and Richardson-extrapolated from cells and 2 cells.
inline double sphere_ground_eigenvalue(const PotentialProfile& f, int n, double r, int cells = 200) {
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "energy", "sphere operator needs n >= 3");
  const double coarse = detail::sphere_ground_fv(f, n, r, cells);
  const double fine = detail::sphere_ground_fv(f, n, r, 2 * cells);
  return (4.0 * fine - coarse) / 3.0;
}

struct NormEquivalence {
  double delta_sq;  // min over the radial support of the sphere ground eigenvalue
  double c1;
  double c2;
  double Q;
  double grad;
  double error;
  bool c1_ok;
  bool c2_ok;
};

inline NormEquivalence norm_equivalence_check(const TestFunction& u, const PotentialProfile& f, int panels = 64) {
  if (u.n < 3) throw Error(ErrorKind::InvalidArgument, "energy", "norm equivalence needs n >= 3");
  const double L = u.support();
  double delta_sq = std::numeric_limits<double>::infinity();
  const int samples = f.constant ? 1 : 64;
  for (int i = 1; i <= samples; ++i) delta_sq = std::min(delta_sq, sphere_ground_eigenvalue(f, u.n, L * i / samples));
  if (!(delta_sq > 0.0)) {
    throw Error(ErrorKind::PositivityFailure, "energy",
                "sphere operator has ground eigenvalue " + std::to_string(delta_sq) + " for " + f.name);
  }
  const FormIntegrals I = form_integrals(u, &f, panels);
  NormEquivalence out;
  out.delta_sq = delta_sq;
  const double lam2 = lambda_of(u.n) * lambda_of(u.n);
  out.c1 = delta_sq / (delta_sq + f.sup_norm);
  out.c2 = 1.0 + f.sup_norm / lam2;
  out.grad = I.grad();
  out.Q = I.grad() + I.potential;
  out.error = I.error * (2.0 + f.sup_norm);
  out.c1_ok = out.c1 * out.grad <= out.Q + 2.0 * out.error;
  out.c2_ok = out.Q <= out.c2 * out.grad + 2.0 * out.error;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Commutant symbol and its Hamilton derivative. Phase-space points reuse geodesic::FlowState
// (t, r, theta, tau, xi, zeta); hats denote division by tau.

struct CommutantParams {
  double C = 1.0;
  double delta = 0.1;
  double alpha = 2.0;
  double t0 = 0.0;
  double tau0 = 1.0;

  void validate() const {
    if (!(C > 0.0 && delta > 0.0 && alpha > 0.0 && tau0 > 0.0) || !std::isfinite(t0)) {
      throw Error(ErrorKind::InvalidArgument, "energy", "commutant parameters C, delta, alpha, tau0 must be > 0");
    }
  }
};

using PhasePoint = geodesic::FlowState;

namespace detail {

struct SymbolFactors {
  double xh, zh2, E, X, R, T, U, S;
  double rho_r, rho_t, sig;
};

inline SymbolFactors factors(const CommutantParams& p, const PhasePoint& x, const geodesic::SphereMetric& g) {
  if (x.tau == 0.0) throw Error(ErrorKind::DomainError, "energy", "commutant symbol needs tau != 0");
  SymbolFactors s;
  s.xh = x.xi / x.tau;
  s.zh2 = geodesic::zeta_norm_sq(x, g) / (x.tau * x.tau);
  s.rho_r = -x.r * x.r + p.alpha * s.xh + 2.0 * p.delta;
  s.rho_t = -(x.t - p.t0) * (x.t - p.t0) + p.alpha * s.xh + 2.0 * p.delta;
  s.sig = (x.r * x.r - s.xh * s.xh - s.zh2) / p.delta;
  s.E = std::exp(p.C * s.xh);
  s.X = Cutoffs::chi(s.xh / p.delta);
  s.R = Cutoffs::chi_tilde(s.rho_r);
  s.T = Cutoffs::chi_tilde(s.rho_t);
  s.U = Cutoffs::chi_tilde(x.tau - p.tau0);
  s.S = Cutoffs::chi(s.sig);
  return s;
}

}  // namespace detail

/// a = e^{C xh} chi(xh/delta) chi~(-r^2 + alpha xh + 2 delta) chi~(-(t-t0)^2 + alpha xh + 2 delta)
///     chi~(tau - tau0) chi((r^2 - xh^2 - |zh|^2) / delta).
inline double commutant_symbol(const CommutantParams& p, const PhasePoint& x,
                               const geodesic::SphereMetric& g = geodesic::Circle{}) {
  const auto s = detail::factors(p, x, g);
  return s.E * s.X * s.R * s.T * s.U * s.S;
}

enum class SymbolClass { none, main, good_sign, hypothesis, elliptic, mixed };

constexpr const char* to_string(SymbolClass c) {
  switch (c) {
    case SymbolClass::none: return "none";
    case SymbolClass::main: return "main";
    case SymbolClass::good_sign: return "good";
    case SymbolClass::hypothesis: return "e1";
    case SymbolClass::elliptic: return "e2";
    case SymbolClass::mixed: return "mixed";
  }
  return "?";
}

struct SymbolDerivative {
  double value = 0.0;
  double main = 0.0;   // -b^2: derivative of e^{C xh}
  double g_xi = 0.0;   // phi1^2 part of chi(xh/delta)'
  double g_r = 0.0;    // chi~_r' part
  double g_t = 0.0;    // chi~_t' part
  double e1 = 0.0;     // phi2^2 part of chi(xh/delta)'
  double e2 = 0.0;     // chi_Sigma' part
  SymbolClass cls = SymbolClass::none;
};

/// H_p a for p = tau^2 - (xi^2 + |zeta|_k^2)/r^2, with H_p the full Hamilton field
/// (twice the flow field of geodesic::hamilton_rhs), split term by term.
inline SymbolDerivative hamilton_derivative_symbol(const CommutantParams& p, const PhasePoint& x,
                                                   const geodesic::SphereMetric& g = geodesic::Circle{}) {
  if (!(x.r > 0.0)) throw Error(ErrorKind::OriginSingularity, "energy", "Hamilton derivative needs r > 0");
  const auto s = detail::factors(p, x, g);
  const double q = x.xi * x.xi + geodesic::zeta_norm_sq(x, g);
  const double r2 = x.r * x.r;
  const double H_xh = -2.0 * q / (r2 * x.tau);
  const double H_r2 = -4.0 * x.xi;
  const double H_t2 = 4.0 * x.tau * (x.t - p.t0);
  const double H_sig = (H_r2 - 2.0 * s.xh * H_xh) / p.delta;  // |zeta|_k is conserved

  const double y = s.xh / p.delta;
  const double p1 = Cutoffs::norm_sq() * detail::bump_sq(2.0 * y + 3.0);
  const double p2 = Cutoffs::norm_sq() * detail::bump_sq(2.0 * y - 3.0);
  const double dR = Cutoffs::chi_tilde_prime(s.rho_r), dT = Cutoffs::chi_tilde_prime(s.rho_t);
  const double dS = Cutoffs::chi_prime(s.sig);

  SymbolDerivative d;
  d.main = p.C * H_xh * s.E * s.X * s.R * s.T * s.U * s.S;
  d.g_xi = s.E * p1 * (H_xh / p.delta) * s.R * s.T * s.U * s.S;
  d.e1 = -s.E * p2 * (H_xh / p.delta) * s.R * s.T * s.U * s.S;
  d.g_r = s.E * s.X * dR * (-H_r2 + p.alpha * H_xh) * s.T * s.U * s.S;
  d.g_t = s.E * s.X * s.R * dT * (-H_t2 + p.alpha * H_xh) * s.U * s.S;
  d.e2 = s.E * s.X * s.R * s.T * s.U * dS * H_sig;
  d.value = d.main + d.g_xi + d.e1 + d.g_r + d.g_t + d.e2;

  // Classify by which derivative supports contain the point.
  const double base = s.E * s.U;
  const bool in_e1 = base * p2 * s.R * s.T * s.S > 0.0;
  const bool in_e2 = base * s.X * s.R * s.T * dS != 0.0;
  const bool in_g = base * s.S * (p1 * s.R * s.T + s.X * dR * s.T + s.X * s.R * dT) > 0.0;
  const bool in_main = base * s.X * s.R * s.T * s.S > 0.0;
  if (in_e1 && in_e2) d.cls = SymbolClass::mixed;
  else if (in_e1) d.cls = SymbolClass::hypothesis;
  else if (in_e2) d.cls = SymbolClass::elliptic;
  else if (in_g) d.cls = SymbolClass::good_sign;
  else if (in_main) d.cls = SymbolClass::main;
  return d;
}

/// H_p a by a fourth-order central difference of a along the integrated flow (RK4 steps of +-h, +-2h).
/// The flow speed grows like 1/r^2, so the step is h * min(1, r^2).
inline double hamilton_derivative_fd(const CommutantParams& p, const PhasePoint& x, double h = 1e-5,
                                     const geodesic::SphereMetric& g = geodesic::Circle{}) {
  using geodesic::FlowSystem;
  h *= std::min(1.0, x.r * x.r);
  auto a_at = [&](double s) {
    const PhasePoint y = geodesic::rk4_step(x, s, g, FlowSystem::full);
    return commutant_symbol(p, y, g);
  };
  const double d = (-a_at(2 * h) + 8 * a_at(h) - 8 * a_at(-h) + a_at(-2 * h)) / (12 * h);
  return 2.0 * d;  // the flow field is half of H_p
}

/// Smallest alpha for which the on-Sigma sign claim holds over the whole support:
/// alpha >= 2 xh (r-taper) and alpha >= 2|t - t0| with (t - t0)^2 < 2 alpha delta + 2 delta (t-taper).
inline double alpha_threshold_on_sigma(double delta) { return 4.0 * delta + std::sqrt(16.0 * delta * delta + 8.0 * delta); }

// ---------------------------------------------------------------------------------------------
// Sign audit.

namespace detail {

inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, v = 0.0;
  while (i > 0) {
    f /= base;
    v += f * static_cast<double>(i % base);
    i /= base;
  }
  return v;
}

}  // namespace detail

struct SignAuditConfig {
  std::size_t target = 10000;        // classified main/good-sign points required
  std::size_t max_draws = 400000;
  double sigma_band = 0.0;           // 0: sample on Sigma; b > 0: |sigma_Sigma| <= b
  double tolerance = 1e-12;
  std::size_t fd_every = 10;         // compare with the flow difference on every k-th counted point
  double fd_step = 1e-5;
  double fd_min_r = 1e-2;
};

struct SignAuditSample {
  PhasePoint point;
  SymbolDerivative derivative;
};

struct SignAuditResult {
  double alpha = 0.0;
  std::size_t draws = 0;
  std::size_t counted = 0;  // main + good-sign
  std::size_t violations = 0;
  double max_value = -std::numeric_limits<double>::infinity();
  std::size_t by_class[6] = {0, 0, 0, 0, 0, 0};
  std::size_t fd_checked = 0;
  double fd_max_diff = 0.0;
  std::vector<SignAuditSample> samples;  // filled only when requested
};

/// Halton samples in the support of a: xh in (-2 delta, 2 delta), r^2 in the r-taper window,
/// t - t0 in the t-taper window, tau in (tau0, tau0 + 1.5), and |zh|^2 from the Sigma band.
inline SignAuditResult sign_audit(const CommutantParams& p, const SignAuditConfig& cfg = {},
                                  bool keep_samples = false) {
  p.validate();
  const geodesic::Circle g;
  SignAuditResult res;
  res.alpha = p.alpha;
  for (std::uint64_t i = 1; res.draws < cfg.max_draws && res.counted < cfg.target; ++i) {
    ++res.draws;
    const double u0 = detail::radical_inverse(i, 2), u1 = detail::radical_inverse(i, 3);
    const double u2 = detail::radical_inverse(i, 5), u3 = detail::radical_inverse(i, 7);
    const double u4 = detail::radical_inverse(i, 11), u5 = detail::radical_inverse(i, 13);
    const double xh = p.delta * (4.0 * u0 - 2.0);
    const double window = p.alpha * xh + 2.0 * p.delta;
    if (!(window > 0.0)) continue;
    const double sig = cfg.sigma_band * (2.0 * u5 - 1.0);
    const double r2_lo = std::max(0.0, xh * xh + p.delta * sig);  // |zh|^2 = r^2 - xh^2 - delta sig >= 0
    if (!(window > r2_lo)) continue;
    const double r2 = r2_lo + u1 * (window - r2_lo);
    PhasePoint x;
    x.r = std::sqrt(r2);
    if (!(x.r > 0.0)) continue;
    x.t = p.t0 + std::sqrt(window) * (2.0 * u2 - 1.0);
    x.tau = p.tau0 + 1.5 * u3;
    if (!(x.tau > p.tau0)) continue;
    x.theta = {2.0 * std::numbers::pi * u4, 0.0};
    x.xi = x.tau * xh;
    const double zh = std::sqrt(std::max(0.0, r2 - xh * xh - p.delta * sig));
    x.zeta = {(i % 2 == 0 ? 1.0 : -1.0) * x.tau * zh, 0.0};
    const SymbolDerivative d = hamilton_derivative_symbol(p, x, g);
    ++res.by_class[static_cast<int>(d.cls)];
    if (d.cls != SymbolClass::main && d.cls != SymbolClass::good_sign) continue;
    ++res.counted;
    res.max_value = std::max(res.max_value, d.value);
    if (d.value > cfg.tolerance) ++res.violations;
    if (cfg.fd_every > 0 && res.counted % cfg.fd_every == 0 && x.r >= cfg.fd_min_r) {
      const double fd = hamilton_derivative_fd(p, x, cfg.fd_step, g);
      res.fd_max_diff = std::max(res.fd_max_diff, std::abs(fd - d.value));
      ++res.fd_checked;
    }
    if (keep_samples) res.samples.push_back({x, d});
  }
  return res;
}

struct AlphaSearch {
  double alpha_star;      // smallest passing alpha found by bisection
  double alpha_analytic;  // closed-form on-Sigma threshold
  int audits;
};

/// Bisection on alpha for the on-Sigma sign audit (no violations among the counted points).
inline AlphaSearch find_alpha_star(CommutantParams p, SignAuditConfig cfg = {}, double rel_tol = 1e-3) {
  cfg.fd_every = 0;
  AlphaSearch out{0.0, alpha_threshold_on_sigma(p.delta), 0};
  auto passes = [&](double alpha) {
    p.alpha = alpha;
    ++out.audits;
    const auto r = sign_audit(p, cfg);
    return r.violations == 0 && r.counted >= cfg.target;
  };
  double lo = 1e-3 * out.alpha_analytic, hi = out.alpha_analytic;
  while (!passes(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw Error(ErrorKind::NonConvergence, "energy", "no alpha found for the sign audit");
  }
  if (passes(lo)) {
    out.alpha_star = lo;
    return out;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? hi : lo) = mid;
  }
  out.alpha_star = hi;
  return out;
}

}  // namespace diffract::energy
