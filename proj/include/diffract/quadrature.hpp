#pragma once

// Numerical integration engine: globally adaptive Gauss-Kronrod for smooth
// integrands, tanh-sinh (double exponential) for inverse-square-root endpoint
// singularities, and truncated semi-infinite integration for damped tails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <type_traits>
#include <vector>

#include "diffract/error.hpp"

namespace diffract::quad {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;  ///< absolute
  std::size_t evaluations = 0;
};

inline constexpr double default_tol = 1e-10;
inline constexpr std::size_t evaluation_budget = std::size_t{1} << 16;

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK tables).
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline void check_finite(double v, double x, const char* routine) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << routine << ": integrand returned " << v << " at x = " << x;
    throw Error(ErrorKind::NonFinite, "quadrature", os.str());
  }
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod15(const F& f, double a, double b, std::size_t& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  check_finite(fc, center, "integrate_adaptive");
  double kronrod = fc * kronrod_weights[7];
  double gauss = fc * gauss_weights[3];
  double abs_sum = std::abs(fc) * kronrod_weights[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kronrod_nodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    check_finite(f1, center - dx, "integrate_adaptive");
    check_finite(f2, center + dx, "integrate_adaptive");
    kronrod += kronrod_weights[j] * (f1 + f2);
    abs_sum += kronrod_weights[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * (f1 + f2);
  }
  evals += 15;
  const double value = kronrod * half;
  // Roundoff floor keeps the estimate honest on intervals where K ~ G exactly.
  const double err = std::max(std::abs((kronrod - gauss) * half),
                              50.0 * std::numeric_limits<double>::epsilon() * abs_sum * std::abs(half));
  return {a, b, value, err};
}

}  // namespace detail

/// Globally adaptive 7/15 Gauss-Kronrod integration of a smooth integrand.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `tol` (or a roundoff floor relative to the integral
/// of |f|). Throws NonConvergence when the evaluation budget runs out.
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, double tol = default_tol) {
  if (!(a <= b) || !(tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "quadrature", "integrate_adaptive requires a <= b and tol > 0");
  }
  if (a == b) return {0.0, 0.0, 1};
  std::size_t evals = 0;
  std::priority_queue<detail::Segment> heap;
  auto first = detail::kronrod15(f, a, b, evals);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  const double min_width = 1e3 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
  while (total_err > tol) {
    if (evals + 30 > evaluation_budget) {
      std::ostringstream os;
      os << "error estimate " << total_err << " above tol " << tol << " after " << evals
         << " evaluations on [" << a << ", " << b << "]";
      throw Error(ErrorKind::NonConvergence, "quadrature", os.str());
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.b - worst.a <= min_width) {
      // Cannot subdivide further; accept what we have if it is roundoff-limited.
      heap.push(worst);
      break;
    }
    auto left = detail::kronrod15(f, worst.a, mid, evals);
    auto right = detail::kronrod15(f, mid, worst.b, evals);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  if (err > tol && err > 1e-13 * std::abs(sum)) {
    std::ostringstream os;
    os << "interval width underflow with error estimate " << err;
    throw Error(ErrorKind::NonConvergence, "quadrature", os.str());
  }
  return {sum, err, evals};
}

/// Tanh-sinh quadrature for integrands with (at worst) inverse square root
/// endpoint singularities. Endpoint values are never sampled.
///
/// The integrand may take either `f(x)` or `f(x, left_gap, right_gap)` where
/// the gaps `x - a` and `b - x` are computed without cancellation; the second
/// form lets callers evaluate near-singular denominators stably.
template <class F>
QuadResult integrate_endpoint_singular(const F& f, double a, double b, double tol = default_tol) {
  if (!(a <= b) || !(tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "quadrature", "integrate_endpoint_singular requires a <= b and tol > 0");
  }
  if (a == b) return {0.0, 0.0, 1};
  constexpr double t_max = 4.5;
  constexpr int max_level = 11;
  const double width = b - a;
  const double half_pi = 0.5 * std::numbers::pi;
  std::size_t evals = 0;
  double l1 = 0.0;

  auto eval_node = [&](double t) -> double {
    const double u = half_pi * std::sinh(t);
    const double left_gap = width / (1.0 + std::exp(-2.0 * u));
    const double right_gap = width / (1.0 + std::exp(2.0 * u));
    if (left_gap <= 0.0 || right_gap <= 0.0) return 0.0;
    const double x = (t < 0.0) ? a + left_gap : b - right_gap;
    const double cu = std::cosh(u);
    const double weight = 0.5 * width * half_pi * std::cosh(t) / (cu * cu);
    double fx;
    if constexpr (std::is_invocable_v<const F&, double, double, double>) {
      // Exact gaps stay meaningful even where x itself rounds onto an endpoint.
      fx = f(x, left_gap, right_gap);
    } else {
      if (x <= a || x >= b) return 0.0;
      fx = f(x);
    }
    ++evals;
    detail::check_finite(fx, x, "integrate_endpoint_singular");
    l1 += weight * std::abs(fx);
    return weight * fx;
  };

  double h = 1.0;
  double sum = eval_node(0.0);
  for (double t = h; t <= t_max; t += h) sum += eval_node(t) + eval_node(-t);
  double estimate = h * sum;
  double previous = estimate;
  double err = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    for (double t = h; t <= t_max; t += 2.0 * h) sum += eval_node(t) + eval_node(-t);
    estimate = h * sum;
    err = std::abs(estimate - previous);
    previous = estimate;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * h * l1;
    if (level >= 3 && err <= std::max(tol, floor)) {
      return {estimate, err, evals};
    }
  }
  std::ostringstream os;
  os << "tanh-sinh did not reach tol " << tol << " (last difference " << err << ") on [" << a << ", " << b
     << "]";
  throw Error(ErrorKind::NonConvergence, "quadrature", os.str());
}

/// Semi-infinite integral over [a, inf) for integrands eventually bounded by
/// M exp(-kappa s), with `decay_rate_hint` <= kappa.
///
/// The tail is truncated once the sampled envelope over a window of length
/// 1/hint satisfies envelope/hint < tol/2; the finite part is then handed to
/// integrate_adaptive with the remaining half of the budget.
template <class F>
QuadResult integrate_decaying(const F& f, double a, double tol, double decay_rate_hint) {
  if (!(decay_rate_hint > 0.0) || !(tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "quadrature", "integrate_decaying requires hint > 0 and tol > 0");
  }
  const double window = 1.0 / decay_rate_hint;
  constexpr int samples_per_window = 9;
  constexpr int max_windows = 400;
  constexpr int stall_windows = 12;
  std::size_t evals = 0;
  std::vector<double> envelopes;
  double cut = a;
  bool converged = false;
  for (int k = 0; k < max_windows; ++k) {
    const double lo = a + k * window;
    double env = 0.0;
    for (int j = 0; j <= samples_per_window; ++j) {
      const double s = lo + window * j / samples_per_window;
      const double v = f(s);
      ++evals;
      detail::check_finite(v, s, "integrate_decaying");
      env = std::max(env, std::abs(v));
    }
    envelopes.push_back(env);
    if (env / decay_rate_hint < 0.5 * tol) {
      cut = lo;
      converged = true;
      break;
    }
    if (static_cast<int>(envelopes.size()) >= 2 * stall_windows) {
      // Block maxima, so a window that happens to straddle a zero of an oscillating
      // integrand does not pass for decay. Over stall_windows e-foldings the block
      // maximum must shrink.
      const auto end = envelopes.end();
      const double earlier = *std::max_element(end - 2 * stall_windows, end - stall_windows);
      const double recent = *std::max_element(end - stall_windows, end);
      if (earlier > 0.0 && recent >= earlier) {
        std::ostringstream os;
        os << "tail envelope not shrinking near s = " << lo << " (hint " << decay_rate_hint << ")";
        throw Error(ErrorKind::BadHint, "quadrature", os.str());
      }
    }
  }
  if (!converged) {
    throw Error(ErrorKind::BadHint, "quadrature", "tail bound never met within 400 e-folding windows");
  }
  QuadResult body = integrate_adaptive(f, a, cut, 0.5 * tol);
  body.evaluations += evals;
  body.error_estimate += 0.5 * tol;
  return body;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "quadrature", "Gauss-Legendre order must be >= 1");
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  int size() const { return static_cast<int>(nodes.size()); }

  /// Fixed-order rule mapped to [a, b].
  template <class F>
  double integrate(const F& f, double a, double b) const {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
    return s * h;
  }
};

}  // namespace diffract::quad
