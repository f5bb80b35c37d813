#pragma once

// Radial grids, sampled radial fields, the Hankel transform of order nu by
// direct quadrature, and the radial operator L_mu = d^2/dr^2 + (1/r) d/dr - mu^2/r^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "diffract/error.hpp"
#include "diffract/quadrature.hpp"
#include "diffract/specfun.hpp"

namespace diffract::hankel {

enum class Measure { r_dr };

/// Strictly increasing radial sample points, all > 0, with measure r dr.
class RadialGrid {
 public:
  RadialGrid() = default;
  explicit RadialGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
      throw Error(ErrorKind::InvalidArgument, "hankel", "radial grid needs at least two points");
    }
    if (!(points_.front() > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "hankel", "radial grid must start at r > 0");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!(points_[i] > points_[i - 1])) {
        throw Error(ErrorKind::InvalidArgument, "hankel", "radial grid must be strictly increasing");
      }
    }
  }

  /// r_i = i h for i = 1..N with N h = r_max.
  static RadialGrid uniform(double r_max, std::size_t intervals) {
    std::vector<double> pts(intervals);
    const double h = r_max / static_cast<double>(intervals);
    for (std::size_t i = 0; i < intervals; ++i) pts[i] = h * static_cast<double>(i + 1);
    return RadialGrid(std::move(pts));
  }

  /// Geometric spacing from r_min (ratio 1.05 by default) until the spacing
  /// reaches h, uniform afterwards up to r_max.
  static RadialGrid graded(double r_min, double h, double r_max, double ratio = 1.05) {
    if (!(r_min > 0.0) || !(h >= r_min) || !(ratio > 1.0) || !(r_max > r_min)) {
      throw Error(ErrorKind::InvalidArgument, "hankel", "graded grid requires 0 < r_min <= h, ratio > 1");
    }
    std::vector<double> pts;
    double r = r_min, d = r_min;
    while (r < r_max * (1.0 - 1e-12)) {
      pts.push_back(r);
      d = std::min(d * ratio, h);
      r += d;
    }
    pts.push_back(r_max);
    return RadialGrid(std::move(pts));
  }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double r_max() const { return points_.back(); }
  Measure measure() const noexcept { return Measure::r_dr; }

 private:
  std::vector<double> points_;
};

struct RadialField {
  RadialGrid grid;
  std::vector<double> values;

  RadialField() = default;
  RadialField(RadialGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) {
      throw Error(ErrorKind::InvalidArgument, "hankel", "field length does not match grid");
    }
    for (double x : values) {
      if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "hankel", "field contains a non-finite value");
    }
  }

  template <class F>
  static RadialField sample(const RadialGrid& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
    return RadialField(g, std::move(v));
  }
};

namespace detail {
inline std::array<std::vector<double>, 3> fd_weights(double z, const std::vector<double>& x);
}  // namespace detail

/// Cubic spline through the samples. End second derivatives come from the
/// cubic through the four outermost samples, which keeps the O(h^4) accuracy
/// up to the ends. Extended to r = 0 by the first piece.
class CubicSpline {
 public:
  CubicSpline(const std::vector<double>& x, const std::vector<double>& y) : x_(x), y_(y), m_(x.size(), 0.0) {
    const std::size_t n = x.size();
    if (n < 3) return;
    if (n >= 4) {
      const auto wl = detail::fd_weights(x[0], {x[0], x[1], x[2], x[3]});
      const auto wr = detail::fd_weights(x[n - 1], {x[n - 4], x[n - 3], x[n - 2], x[n - 1]});
      for (std::size_t j = 0; j < 4; ++j) {
        m_[0] += wl[2][j] * y[j];
        m_[n - 1] += wr[2][j] * y[n - 4 + j];
      }
    }
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
      diag[i] = 2.0 * (hl + hr);
      upper[i] = hr;
      rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    rhs[1] -= (x[1] - x[0]) * m_[0];
    rhs[n - 2] -= (x[n - 1] - x[n - 2]) * m_[n - 1];
    // Thomas sweep on rows 1..n-2 with the end values fixed.
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double lower = x[i] - x[i - 1];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[n - 2] = rhs[n - 2] / diag[n - 2];
    for (std::size_t i = n - 3; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  /// Value on piece k (between x_k and x_{k+1}) at r; r may lie outside for extension.
  double eval_piece(std::size_t k, double r) const {
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - r) / h, b = (r - x_[k]) / h;
    return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
  }

  double operator()(double r) const {
    if (r <= x_.front()) return eval_piece(0, r);
    if (r >= x_.back()) return eval_piece(x_.size() - 2, r);
    const auto it = std::upper_bound(x_.begin(), x_.end(), r);
    return eval_piece(static_cast<std::size_t>(it - x_.begin()) - 1, r);
  }

 private:
  std::vector<double> x_, y_, m_;
};

namespace detail {

// Quadrature nodes r_q with weights w_q s(r_q) r_q for int_0^{r_max} s(r) (.) r dr.
struct WeightedNodes {
  std::vector<double> r, w;
};

inline WeightedNodes spline_nodes(const RadialField& field, int order = 8) {
  const auto& x = field.grid.points();
  CubicSpline spline(x, field.values);
  quad::GaussLegendre rule(order);
  WeightedNodes out;
  auto add_interval = [&](double lo, double hi, std::size_t piece) {
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double r = mid + half * rule.nodes[j];
      out.r.push_back(r);
      out.w.push_back(half * rule.weights[j] * spline.eval_piece(piece, r) * r);
    }
  };
  add_interval(0.0, x.front(), 0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) add_interval(x[k], x[k + 1], k);
  return out;
}

inline void check_tail(const RadialField& field) {
  const std::size_t n = field.values.size();
  double peak = 0.0, tail = 0.0;
  const std::size_t tail_start = n - std::max<std::size_t>(1, n / 10);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::abs(field.values[i]) * field.grid[i];
    peak = std::max(peak, v);
    if (i >= tail_start) tail = std::max(tail, v);
  }
  if (peak > 0.0 && tail > 1e-6 * peak) {
    std::ostringstream os;
    os << "field tail |g| r = " << tail << " exceeds 1e-6 of peak " << peak << " near r_max = " << field.grid.r_max();
    throw Error(ErrorKind::TailTooFat, "hankel", os.str());
  }
}

// Finite-difference weights for derivatives 0..2 at z on the given nodes (Fornberg).
inline std::array<std::vector<double>, 3> fd_weights(double z, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::array<std::vector<double>, 3> c;
  for (auto& v : c) v.assign(n, 0.0);
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[k][i] = c1 * (static_cast<double>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[k][j] = (c4 * c[k][j] - static_cast<double>(k) * c[k - 1][j]) / c3;
      }
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

/// H_nu g(lambda) = int_0^{r_max} g(r) J_nu(lambda r) r dr over a cubic-spline
/// interpolant of the samples, eight-point Gauss-Legendre per interval.
inline RadialField hankel_transform(const RadialField& field, BesselOrder order, const RadialGrid& out_grid) {
  detail::check_tail(field);
  std::vector<double> out(out_grid.size(), 0.0);
  const bool all_zero = std::all_of(field.values.begin(), field.values.end(), [](double v) { return v == 0.0; });
  if (!all_zero) {
    const auto nodes = detail::spline_nodes(field);
    for (std::size_t i = 0; i < out_grid.size(); ++i) {
      const double lambda = out_grid[i];
      double sum = 0.0;
      for (std::size_t q = 0; q < nodes.r.size(); ++q) {
        sum += nodes.w[q] * specfun::bessel_j(order, lambda * nodes.r[q]);
      }
      out[i] = sum;
    }
  }
  return RadialField(out_grid, std::move(out));
}

/// L2(r dr) norm of the spline interpolant of a field (lambda d lambda on the transform side).
inline double l2_norm(const RadialField& field) {
  const auto& x = field.grid.points();
  CubicSpline spline(x, field.values);
  quad::GaussLegendre rule(6);
  double sum = 0.0;
  auto add = [&](double lo, double hi, std::size_t piece) {
    sum += rule.integrate(
        [&](double r) {
          const double s = spline.eval_piece(piece, r);
          return s * s * r;
        },
        lo, hi);
  };
  add(0.0, x.front(), 0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) add(x[k], x[k + 1], k);
  return std::sqrt(sum);
}

struct RadialOperatorResult {
  RadialField field;
  std::vector<std::size_t> one_sided;  // indices evaluated with one-sided stencils
};

/// L_mu applied by three-point nonuniform central differences in the interior,
/// four-point one-sided stencils at the two ends.
inline RadialOperatorResult apply_radial_operator(const RadialField& field, double mu) {
  const auto& x = field.grid.points();
  const std::size_t n = x.size();
  if (n < 16) {
    std::ostringstream os;
    os << "radial operator needs >= 16 grid points, got " << n;
    throw Error(ErrorKind::GridTooCoarse, "hankel", os.str());
  }
  const auto& u = field.values;
  std::vector<double> out(n);
  RadialOperatorResult res;
  auto apply = [&](std::size_t i, std::size_t first, std::size_t count) {
    std::vector<double> nodes(x.begin() + static_cast<std::ptrdiff_t>(first),
                              x.begin() + static_cast<std::ptrdiff_t>(first + count));
    const auto w = detail::fd_weights(x[i], nodes);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      d1 += w[1][j] * u[first + j];
      d2 += w[2][j] * u[first + j];
    }
    out[i] = d2 + d1 / x[i] - mu * mu * u[i] / (x[i] * x[i]);
  };
  apply(0, 0, 4);
  res.one_sided.push_back(0);
  for (std::size_t i = 1; i + 1 < n; ++i) apply(i, i - 1, 3);
  apply(n - 1, n - 4, 4);
  res.one_sided.push_back(n - 1);
  res.field = RadialField(field.grid, std::move(out));
  return res;
}

/// Relative L2(r dr) defect ||H_nu H_nu g - g|| / ||g||, with the field's own
/// grid serving as the lambda grid. Zero field gives 0.
inline double verify_involution(const RadialField& field, BesselOrder order) {
  const double norm = l2_norm(field);
  if (norm == 0.0) return 0.0;
  const RadialField once = hankel_transform(field, order, field.grid);
  const RadialField twice = hankel_transform(once, order, field.grid);
  std::vector<double> diff(field.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = twice.values[i] - field.values[i];
  return l2_norm(RadialField(field.grid, std::move(diff))) / norm;
}

/// ||H(L_nu g) + lambda^2 H(g)|| / ||lambda^2 H(g)|| over lambda_grid.
inline double eigen_relation_defect(const RadialField& field, BesselOrder order, const RadialGrid& lambda_grid) {
  const RadialField lg = apply_radial_operator(field, order.value()).field;
  const RadialField h_lg = hankel_transform(lg, order, lambda_grid);
  const RadialField h_g = hankel_transform(field, order, lambda_grid);
  std::vector<double> num(lambda_grid.size()), den(lambda_grid.size());
  for (std::size_t i = 0; i < num.size(); ++i) {
    const double l2 = lambda_grid[i] * lambda_grid[i];
    num[i] = h_lg.values[i] + l2 * h_g.values[i];
    den[i] = l2 * h_g.values[i];
  }
  return l2_norm(RadialField(lambda_grid, std::move(num))) / l2_norm(RadialField(lambda_grid, std::move(den)));
}

/// | ||H_nu g||_{lambda d lambda} - ||g||_{r dr} | / ||g||_{r dr}.
inline double plancherel_defect(const RadialField& field, BesselOrder order, const RadialGrid& lambda_grid) {
  const double g_norm = l2_norm(field);
  if (g_norm == 0.0) return 0.0;
  return std::abs(l2_norm(hankel_transform(field, order, lambda_grid)) - g_norm) / g_norm;
}

}  // namespace diffract::hankel
