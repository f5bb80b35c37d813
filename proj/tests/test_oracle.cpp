#include <gtest/gtest.h>

#include <cmath>

#include "diffract/oracle.hpp"

using namespace diffract;
using namespace diffract::oracle;
using kernel::KernelPoint;
using kernel::ModeParams;
using kernel::Region;

namespace {

// Interior region II/III points for a source at r2 = 1, at least 0.1 off both cones.
std::vector<KernelPoint> interior_points() {
  std::vector<KernelPoint> pts;
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    for (double r1 : {0.3, 0.7, 1.2, 1.6, 2.2, 2.9}) {
      const KernelPoint p(r1, 1.0, t);
      const double gap = std::min(std::abs(t - std::abs(r1 - 1.0)), std::abs(t - r1 - 1.0));
      if (gap > 0.1 && kernel::classify_region(p) != Region::I) pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace

TEST(Mollifier, NormalizedAgainstRdr) {
  for (auto [r0, sigma] : {std::pair{1.0, 0.006}, {0.1, 0.02}, {0.05, 0.02}}) {
    const Mollifier psi(r0, sigma);
    const double lo = std::max(0.0, r0 - psi.support()), hi = r0 + psi.support();
    const double mass = quad::integrate_adaptive([&](double r) { return psi(r) * r; }, lo, hi, 1e-13).value;
    // Truncation at 8 sigma loses ~1e-15 of the mass.
    EXPECT_NEAR(mass, 1.0, 1e-12) << r0 << " " << sigma;
  }
}

TEST(FDConfig, Validation) {
  FDConfig c = FDConfig::standard(0.5, 1e-3, 1.0, 3.0);
  EXPECT_NO_THROW(c.validate());
  c.dt = 0.95e-3;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CFLViolation);
  }
  c = FDConfig::standard(0.5, 1e-3, 1.0, 3.0);
  c.mollifier_width = 3e-3;
  EXPECT_THROW(c.validate(), Error);
  c = FDConfig::standard(0.5, 1e-3, 2.5, 3.0);
  try {
    solve_mode(c, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoundaryContamination);
  }
  // Large nu shrinks dt in whole fractions of dr / 2.
  const FDConfig big = FDConfig::standard(8.0, 1e-3, 1.0, 3.0);
  EXPECT_LT(big.dt, 0.5e-3);
  EXPECT_NEAR(0.5e-3 / big.dt, std::round(0.5e-3 / big.dt), 1e-9);
  EXPECT_NO_THROW(solve_mode(big, 1.0));
}

TEST(SolveMode, ZeroDataGivesZeroField) {
  const auto sol = solve_mode(FDConfig::standard(1.2, 2e-3, 1.0, 3.0), 1.0, 0.0);
  for (const auto& slice : sol.slices) {
    for (double u : slice) EXPECT_EQ(u, 0.0);
  }
  EXPECT_EQ(sol.peak, 0.0);
}

TEST(SolveMode, EnergyConserved) {
  for (double nu : {0.0, 0.5, 2.3}) {
    const auto sol = solve_mode(FDConfig::standard(nu, 1e-3, 2.0, 3.5), 1.0);
    EXPECT_LT(sol.max_energy_drift(), 1e-3) << "nu=" << nu;
    EXPECT_GT(sol.energy.front(), 0.0);
  }
}

TEST(SolveMode, FinitePropagationSpeed) {
  const FDConfig cfg = FDConfig::standard(0.8, 1e-3, 1.5, 3.6);
  const auto sol = solve_mode(cfg, 1.5);
  // Leapfrog dispersion leaves a Gaussian-tail precursor right at the support edge; allow two extra widths.
  const double support = (mollifier_support_sigmas + 2.0) * cfg.mollifier_width;
  for (double r : {0.2, 0.6, 2.6}) {
    for (double t = 0.0; t < std::abs(1.5 - r) - support; t += 0.05) {
      EXPECT_LT(std::abs(sol.value(r, t)), 1e-10 * sol.peak) << "r=" << r << " t=" << t;
    }
  }
}

TEST(CompareKernel, HalfOrderAgreement) {
  const ModeParams m(0, 0.25);
  const auto pts = interior_points();
  ASSERT_GE(pts.size(), 20u);
  const auto rep = compare_kernel(m, FDConfig::standard(m.nu, 1e-3, 2.5, 4.0), pts);
  EXPECT_LT(rep.max_rel, 0.02);
  EXPECT_LE(rep.mean_rel, rep.max_rel);
  int three = 0;
  for (const auto& e : rep.points) three += (e.region == Region::III);
  EXPECT_GT(three, 0);
}

TEST(CompareKernel, FreeModeZero) {
  // a = 0, n = 0: the free 2D mode-0 kernel (1/pi) int_0^{s*} D^{-1/2} ds.
  const ModeParams m(0, 0.0);
  const auto rep = compare_kernel(m, FDConfig::standard(0.0, 1e-3, 2.5, 4.0), interior_points());
  EXPECT_LT(rep.max_rel, 0.02);
}

TEST(CompareKernel, SeveralOrders) {
  for (auto [n, a] : {std::pair{1, 0.69}, {3, 1.24}}) {
    const ModeParams m(n, a);
    const auto rep = compare_kernel(m, FDConfig::standard(m.nu, 2e-3, 2.5, 4.0), interior_points());
    EXPECT_LT(rep.max_rel, 0.02) << "n=" << n;
  }
}

TEST(CompareKernel, RegionOneBelowLeakageBound) {
  const ModeParams m(0, 0.25);
  const FDConfig cfg = FDConfig::standard(m.nu, 1e-3, 1.0, 3.0);
  const auto sol = solve_mode(cfg, 1.0);
  int checked = 0;
  for (double t : {0.2, 0.5, 0.8}) {
    for (double r1 : {0.1, 0.3, 1.6, 1.9, 2.4}) {
      const double distance = std::abs(r1 - 1.0) - t;
      if (distance < 5.0 * cfg.mollifier_width) continue;
      const double amplitude = 0.5 / std::sqrt(r1);
      EXPECT_LT(std::abs(sol.value(r1, t)), leakage_bound(amplitude, distance, cfg.mollifier_width));
      EXPECT_LT(std::abs(sol.value(r1, t)), 1e-3 * sol.peak);
      ++checked;
    }
  }
  EXPECT_GT(checked, 6);
}

TEST(CompareKernel, RejectsBadInput) {
  const ModeParams m(0, 0.25);
  const FDConfig cfg = FDConfig::standard(m.nu, 2e-3, 2.0, 3.5);
  try {
    compare_kernel(m, cfg, {KernelPoint(1.5, 1.0, 0.51)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConeProximity);
  }
  EXPECT_THROW(compare_kernel(ModeParams(1, 0.25), cfg, {KernelPoint(1.5, 1.0, 1.0)}), Error);
  EXPECT_THROW(compare_kernel(m, cfg, {KernelPoint(1.5, 1.0, 1.0), KernelPoint(1.5, 1.2, 1.0)}), Error);
}

TEST(Convergence, SecondOrderInDr) {
  const std::vector<KernelPoint> pts = {KernelPoint(1.3, 1.0, 0.8), KernelPoint(0.8, 1.0, 1.0),
                                        KernelPoint(1.6, 1.0, 1.2), KernelPoint(2.1, 1.0, 1.6)};
  for (double a : {0.25, 1.7}) {
    const auto study = convergence_study(ModeParams(0, a), 1.0, 0.024, 2.0, 3.6, pts, {4e-3, 2e-3, 1e-3});
    ASSERT_EQ(study.orders.size(), 2u);
    for (double order : study.orders) EXPECT_NEAR(order, 2.0, 0.3) << "a=" << a;
  }
}
