#pragma once

// Aggregate acceptance suite: one check per criterion, shared by the CLI `verify`
// subcommand and the acceptance test binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diffract/energy.hpp"
#include "diffract/geodesic.hpp"
#include "diffract/hankel.hpp"
#include "diffract/kernel.hpp"
#include "diffract/oracle.hpp"

namespace diffract::verify {

enum class Tier { quick, full };

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget = 0.0;  // runtime budget in seconds; enforced in the full tier
  std::string detail;
};

/// Criteria whose literal statement is known not to hold; see README.
inline const std::set<int>& known_failures() {
  static const std::set<int> k = {1};
  return k;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (cond ? "" : " [violated]");
  }
  void note(const std::string& what) { detail << (detail.tellp() > 0 ? "; " : "") << what; }
};

inline double gaussian(double r) { return std::exp(-0.5 * r * r); }

inline double bump(double r) {
  const double x = (r - 2.5) / 1.5;
  return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

inline std::vector<kernel::KernelPoint> interior_points() {
  std::vector<kernel::KernelPoint> pts;
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    for (double r1 : {0.3, 0.7, 1.2, 1.6, 2.2, 2.9}) {
      const kernel::KernelPoint p(r1, 1.0, t);
      const double gap = std::min(std::abs(t - std::abs(r1 - 1.0)), std::abs(t - r1 - 1.0));
      if (gap > 0.1 && kernel::classify_region(p) != kernel::Region::I) pts.push_back(p);
    }
  }
  return pts;
}

inline geodesic::FlowState on_sigma(double r, double zeta) {
  geodesic::FlowState s;
  s.r = r;
  s.tau = 1.0;
  s.zeta = {zeta, 0.0};
  s.xi = std::sqrt(r * r - zeta * zeta);
  return s;
}

}  // namespace detail

inline CriterionResult diffractive_limit(Tier) {
  detail::Check c;
  const double beta = 1e-4, pi2 = std::numbers::pi / 2.0;
  double worst = 0.0, corrected = 0.0, tiny = 0.0;
  for (double nu : {0.5, 1.2, 3.7}) {
    const double v = kernel::diffractive_integral(nu, beta);
    worst = std::max(worst, std::abs(v - pi2));
    corrected = std::max(corrected, std::abs(v - (pi2 - nu * beta)));
    tiny = std::max(tiny, std::abs(kernel::diffractive_integral(nu, 1e-8) - pi2));
  }
  c.require(worst < 1e-5, "max |I(nu, 1e-4) - pi/2| = " + detail::fmt(worst) + " (tol 1e-5)");
  c.note("first-order corrected max |I - (pi/2 - nu beta)| = " + detail::fmt(corrected));
  c.note("max |I(nu, 1e-8) - pi/2| = " + detail::fmt(tiny));
  return {1, "diffractive-limit", c.ok, 0.0, 1.0, c.detail.str()};
}

inline CriterionResult jump_reproduction(Tier) {
  detail::Check c;
  const double j = kernel::cone_limits(kernel::ModeParams(0, 0.25), 1.0, 2.0).jump_estimate;
  c.require(std::abs(j + 0.5) < 1e-3, "extrapolated jump = " + detail::fmt(j) + " (target -0.5, tol 1e-3)");
  return {2, "jump-reproduction", c.ok, 0.0, 30.0, c.detail.str()};
}

inline CriterionResult free_null(Tier) {
  detail::Check c;
  double worst = 0.0;
  for (int n = 0; n <= 10; ++n) {
    worst = std::max(worst, std::abs(kernel::cone_limits(kernel::ModeParams(n, 0.0), 1.0, 2.0).jump_estimate));
  }
  c.require(worst < 1e-6, "max |jump| over 0 <= n <= 10 at a = 0: " + detail::fmt(worst) + " (tol 1e-6)");
  return {3, "free-null", c.ok, 0.0, 120.0, c.detail.str()};
}

inline CriterionResult exclusion(Tier) {
  detail::Check c;
  const bool flagged = kernel::is_mode_jump_nonzero(1, 3.0);
  c.require(!flagged, std::string("is_mode_jump_nonzero(1, 3) = ") + (flagged ? "true" : "false"));
  const double j = kernel::cone_limits(kernel::ModeParams(1, 3.0), 1.0, 2.0).jump_estimate;
  c.require(std::abs(j) < 1e-6, "measured mode-1 jump = " + detail::fmt(j) + " (tol 1e-6)");
  return {4, "exclusion", c.ok, 0.0, 30.0, c.detail.str()};
}

inline CriterionResult lipschitz_hankel(Tier) {
  detail::Check c;
  double worst = 0.0;
  int count = 0;
  for (double nu : {0.3, 1.5, 3.2}) {
    for (double ratio : {0.5, 1.0, 2.0}) {
      for (double t : {0.5, 1.0, 2.0}) {
        worst = std::max(worst, kernel::verify_lipschitz_hankel(nu, ratio, 1.0, t).residual);
        ++count;
      }
    }
  }
  c.require(worst < 1e-6, "max residual over " + std::to_string(count) + " points = " + detail::fmt(worst) +
                              " (tol 1e-6)");
  return {5, "lipschitz-hankel", c.ok, 0.0, 60.0, c.detail.str()};
}

inline CriterionResult hankel_involution(Tier) {
  using namespace hankel;
  detail::Check c;
  const double coarse =
      verify_involution(RadialField::sample(RadialGrid::uniform(12.0, 200), detail::gaussian), BesselOrder(0.0));
  const double fine =
      verify_involution(RadialField::sample(RadialGrid::uniform(12.0, 400), detail::gaussian), BesselOrder(0.0));
  c.require(coarse < 1e-3, "involution defect = " + detail::fmt(coarse) + " (tol 1e-3)");
  c.require(fine < coarse, "refined defect = " + detail::fmt(fine));
  double eig = 0.0;
  for (double nu : {0.0, 0.5, 2.2}) {
    const auto field = RadialField::sample(RadialGrid::uniform(6.0, 600), detail::bump);
    eig = std::max(eig, eigen_relation_defect(field, BesselOrder(nu), RadialGrid::uniform(6.0, 60)));
  }
  c.require(eig < 1e-2, "eigen-relation relative error = " + detail::fmt(eig) + " (tol 1e-2)");
  return {6, "hankel-involution", c.ok, 0.0, 60.0, c.detail.str()};
}

inline CriterionResult oracle_cross_validation(Tier) {
  using kernel::KernelPoint;
  using kernel::ModeParams;
  using kernel::Region;
  detail::Check c;
  const ModeParams m(0, 0.25);
  const auto pts = detail::interior_points();
  const auto rep = oracle::compare_kernel(m, oracle::FDConfig::standard(m.nu, 1e-3, 2.5, 4.0), pts);
  std::size_t interior = 0;
  for (const auto& e : rep.points) interior += (e.region == Region::II || e.region == Region::III);
  c.require(interior >= 20, std::to_string(interior) + " region II/III points");
  c.require(rep.max_rel < 0.02, "max relative error = " + detail::fmt(rep.max_rel) + " (tol 2e-2)");

  const auto cfg = oracle::FDConfig::standard(m.nu, 1e-3, 1.0, 3.0);
  const auto sol = oracle::solve_mode(cfg, 1.0);
  int checked = 0, leaks = 0;
  for (double t : {0.2, 0.5, 0.8}) {
    for (double r1 : {0.1, 0.3, 1.6, 1.9, 2.4}) {
      const double distance = std::abs(r1 - 1.0) - t;
      if (distance < 5.0 * cfg.mollifier_width) continue;
      ++checked;
      if (!(std::abs(sol.value(r1, t)) < oracle::leakage_bound(0.5 / std::sqrt(r1), distance, cfg.mollifier_width))) {
        ++leaks;
      }
    }
  }
  c.require(leaks == 0 && checked > 0,
            "region I above leakage bound at " + std::to_string(leaks) + "/" + std::to_string(checked) + " points");

  const std::vector<KernelPoint> cp = {KernelPoint(1.3, 1.0, 0.8), KernelPoint(0.8, 1.0, 1.0),
                                       KernelPoint(1.6, 1.0, 1.2), KernelPoint(2.1, 1.0, 1.6)};
  const auto study = oracle::convergence_study(m, 1.0, 0.024, 2.0, 3.6, cp, {4e-3, 2e-3, 1e-3});
  const double order = study.orders.back();
  c.require(std::abs(order - 2.0) <= 0.3, "observed order = " + detail::fmt(order) + " (2 +- 0.3)");
  return {7, "oracle-cross-validation", c.ok, 0.0, 300.0, c.detail.str()};
}

inline CriterionResult flow_geometry(Tier tier) {
  using namespace geodesic;
  detail::Check c;
  const Circle g;
  bool all_reach = true;
  for (double r0 : {0.5, 1.0, 2.0}) {
    all_reach &= integrate_flow(detail::on_sigma(r0, 0.0), g, 3.0, 1e-4, FlowSystem::full).status ==
                 FlowStatus::origin_reached;
  }
  c.require(all_reach, std::string("zeta = 0 trajectories reach r < 1e-6: ") + (all_reach ? "yes" : "no"));

  const auto s1 = detail::on_sigma(2.0, 1.0);
  const auto t1 = integrate_flow(s1, g, 4.0, 1e-4, FlowSystem::full);
  const double env = SecTanSolution::through(s1.r, s1.xi, 1.0).envelope();
  c.require(t1.min_r() >= env - 1e-6, "|zeta| = 1: min r - envelope = " + detail::fmt(t1.min_r() - env));

  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sig = 0.0, tau = 0.0;
  const int cases = tier == Tier::quick ? 3 : 8;
  for (int i = 0; i < cases; ++i) {
    FlowState s0;
    s0.r = 0.8 + u(rng);
    s0.tau = 0.5 + u(rng);
    s0.xi = 2 * u(rng) - 0.5;
    s0.zeta = {0.2 + u(rng), 0.0};
    const auto tr = integrate_flow(s0, g, 2.0, 1e-4, FlowSystem::full);
    sig = std::max(sig, tr.max_sigma_drift());
    tau = std::max(tau, tr.max_tau_drift());
  }
  c.require(sig < 1e-8 && tau < 1e-8, "sigma drift = " + detail::fmt(sig) + ", tau drift = " + detail::fmt(tau));

  double dist = 0.0;
  for (double z : {1.0, 0.4}) {
    const auto s0 = detail::on_sigma(2.0, z);
    const auto full = integrate_flow(s0, g, 4.0, 1e-4, FlowSystem::full);
    const auto resc = integrate_flow(s0, g, 2.0, 1e-4, FlowSystem::rescaled);
    dist = std::max(dist, matched_distance(full, resc, g, 0.1).distance);
  }
  c.require(dist < 1e-6, "rescaled vs full distance on r > 0.1 = " + detail::fmt(dist) + " (tol 1e-6)");
  return {8, "flow-geometry", c.ok, 0.0, 30.0, c.detail.str()};
}

inline CriterionResult hardy_norm_equivalence(Tier tier) {
  using namespace energy;
  detail::Check c;
  const int per_n = tier == Tier::quick ? 5 : 20;
  int hardy_bad = 0, ne_bad = 0, checked = 0;
  double worst_ratio = 0.0;
  const auto mix = PotentialProfile::zonal([](double r, double z) { return 0.2 * z * z + 0.1 * std::cos(r) * z; },
                                           0.3, -0.1, "zonal-mix");
  for (int n : {3, 4, 5}) {
    const double lam2 = lambda_of(n) * lambda_of(n);
    const std::vector<PotentialProfile> pots = {PotentialProfile::constant_value(1.0),
                                                PotentialProfile::constant_value(-0.5 * lam2), mix};
    for (const auto& fn : random_suite(n, per_n)) {
      const auto h = hardy_check(fn);
      hardy_bad += !h.holds;
      worst_ratio = std::max(worst_ratio, h.ratio / h.bound);
      for (const auto& f : pots) {
        const auto ne = norm_equivalence_check(fn, f);
        ne_bad += !(ne.c1_ok && ne.c2_ok);
        ++checked;
      }
    }
  }
  c.require(hardy_bad == 0, "Hardy violations " + std::to_string(hardy_bad) + "/" + std::to_string(3 * per_n) +
                                " (max ratio/bound " + detail::fmt(worst_ratio) + ")");
  c.require(ne_bad == 0, "norm-equivalence violations " + std::to_string(ne_bad) + "/" + std::to_string(checked));
  return {9, "hardy-norm-equivalence", c.ok, 0.0, 60.0, c.detail.str()};
}

inline CriterionResult commutant_sign(Tier tier) {
  using namespace energy;
  detail::Check c;
  CommutantParams p{1.0, 0.1, 2.0, 0.0, 1.0};
  SignAuditConfig cfg;
  cfg.target = tier == Tier::quick ? 2000 : 10000;
  const auto search = find_alpha_star(p, cfg);
  p.alpha = search.alpha_star;
  const auto audit = sign_audit(p, cfg);
  c.note("alpha* = " + detail::fmt(search.alpha_star) + " (closed-form bound " + detail::fmt(search.alpha_analytic) +
         ")");
  c.require(audit.counted >= static_cast<std::size_t>(cfg.target) && audit.violations == 0,
            std::to_string(audit.violations) + " violations among " + std::to_string(audit.counted) +
                " main/good points (max H_p a = " + detail::fmt(audit.max_value) + ")");
  c.require(audit.fd_checked > 0 && audit.fd_max_diff < 1e-6,
            "analytic vs flow FD max diff = " + detail::fmt(audit.fd_max_diff) + " over " +
                std::to_string(audit.fd_checked) + " points");
  SignAuditConfig off = cfg;
  off.sigma_band = 1.0;
  off.fd_every = 0;
  const auto band = sign_audit(p, off);
  c.note("diagnostic off-Sigma band: " + std::to_string(band.violations) + "/" + std::to_string(band.counted) +
         " positive");
  return {10, "commutant-sign", c.ok, 0.0, 120.0, c.detail.str()};
}

using CriterionFn = std::function<CriterionResult(Tier)>;

inline const std::vector<CriterionFn>& criteria() {
  static const std::vector<CriterionFn> all = {diffractive_limit, jump_reproduction, free_null,
                                               exclusion,         lipschitz_hankel,  hankel_involution,
                                               oracle_cross_validation, flow_geometry, hardy_norm_equivalence,
                                               commutant_sign};
  return all;
}

/// Runs one criterion, timing it and turning thrown errors into failures.
inline CriterionResult run_criterion(int id, Tier tier) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = criteria().at(static_cast<std::size_t>(id - 1))(tier);
  } catch (const std::exception& e) {
    r.id = id;
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (tier == Tier::full && r.budget > 0.0 && r.seconds > r.budget) {
    r.pass = false;
    r.detail += "; runtime " + detail::fmt(r.seconds) + " s over budget " + detail::fmt(r.budget) + " s";
  }
  return r;
}

inline std::vector<CriterionResult> run_suite(Tier tier, const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= static_cast<int>(criteria().size()); ++id) {
    out.push_back(run_criterion(id, tier));
    if (on_result) on_result(out.back());
  }
  return out;
}

inline std::string format_line(const CriterionResult& r) {
  char head[96];
  const bool known = !r.pass && known_failures().count(r.id) > 0;
  std::snprintf(head, sizeof head, "criterion %2d %-24s %s%s [%.2f s] ", r.id, r.name.c_str(),
                r.pass ? "pass" : "FAIL", known ? " (known)" : "", r.seconds);
  return head + r.detail;
}

/// True when the failing set is exactly the declared known-failure set.
inline bool outcome_as_expected(const std::vector<CriterionResult>& results) {
  std::set<int> failed;
  for (const auto& r : results) {
    if (!r.pass) failed.insert(r.id);
  }
  return failed == known_failures();
}

}  // namespace diffract::verify
