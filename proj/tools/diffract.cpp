// diffract: command-line front end for the numerical modules.
//
// Exit codes: 0 success, 1 check failure or numerical error, 2 usage error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "diffract/energy.hpp"
#include "diffract/geodesic.hpp"
#include "diffract/hankel.hpp"
#include "diffract/kernel.hpp"
#include "diffract/oracle.hpp"
#include "diffract/specfun.hpp"
#include "diffract/verify.hpp"

namespace {

using namespace diffract;
using cli::Cell;
using cli::CsvWriter;
using cli::UsageError;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

struct Common {
  std::string output;
  std::string config;
  std::string seed_text = "0x5EED";
  bool reproducible = false;

  std::uint64_t seed() const {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(seed_text, &used, 0);
      if (used != seed_text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw UsageError("--seed must be an unsigned integer (decimal or 0x hex), got '" + seed_text + "'");
    }
  }
};

// Output sink: the --output file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// key=value pairs of every option of the subcommand, after config merging.
std::vector<std::pair<std::string, std::string>> parameters(const CLI::App& sub, const Common& common) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", sub.get_name());
  kv.emplace_back("seed", std::to_string(common.seed()));
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ";") + r;
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_expected_max() == 0 && value.empty()) value = "false";
    kv.emplace_back(name, value.empty() ? "unset" : value);
  }
  return kv;
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string("--") + name + " must be > 0");
}

void check_range(double lo, double hi, const char* name) {
  if (!(hi > lo)) throw UsageError(std::string(name) + " range is empty");
}

// ---------------------------------------------------------------------------------------------

struct SpecfunArgs {
  double nu = 1.0;
  std::string function = "bessel_j";
  double x_min = 0.0, x_max = 20.0;
  int points = 201;
};

int run_specfun(const SpecfunArgs& a, CsvWriter& csv) {
  check_range(a.x_min, a.x_max, "x");
  if (a.points < 2) throw UsageError("--points must be >= 2");
  csv.header({"x", a.function});
  const BesselOrder order(a.nu);
  for (int i = 0; i < a.points; ++i) {
    const double x = a.x_min + (a.x_max - a.x_min) * i / (a.points - 1);
    const double v = a.function == "bessel_j" ? specfun::bessel_j(order, x) : specfun::legendre_q_shifted(order, x);
    csv.row({x, v});
  }
  return 0;
}

struct HankelArgs {
  double nu = 0.0;
  double r_max = 12.0;
  int intervals = 200;
  int refinements = 2;
  double tol = 1e-3;
};

int run_hankel_check(const HankelArgs& a, CsvWriter& csv) {
  check_positive(a.r_max, "r-max");
  check_positive(a.tol, "tol");
  if (a.intervals < 16 || a.refinements < 1) throw UsageError("--intervals >= 16 and --refinements >= 1 required");
  // r^nu e^{-r^2/2} is its own order-nu Hankel transform.
  const double nu = a.nu;
  auto profile = [nu](double r) { return std::pow(r, nu) * std::exp(-0.5 * r * r); };
  const BesselOrder order(nu);
  csv.header({"intervals", "dr", "involution_defect", "plancherel_defect"});
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= a.refinements; ++k) {
    const auto n = static_cast<std::size_t>(a.intervals) << k;
    const auto grid = hankel::RadialGrid::uniform(a.r_max, n);
    const auto field = hankel::RadialField::sample(grid, profile);
    const double inv = hankel::verify_involution(field, order);
    const double pl = hankel::plancherel_defect(field, order, grid);
    if (k == 0) ok &= inv < a.tol;
    ok &= inv < prev;
    prev = inv;
    csv.row({static_cast<std::int64_t>(n), a.r_max / static_cast<double>(n), inv, pl});
  }
  return ok ? 0 : 1;
}

struct KernelGridArgs {
  double a = 0.25;
  int n = 0;
  double r2 = 1.0;
  double r1_min = 0.05, r1_max = 3.0, t_min = 0.05, t_max = 3.0;
  int r1_points = 60, t_points = 60;
};

int run_kernel_grid(const KernelGridArgs& g, CsvWriter& csv) {
  check_positive(g.r2, "r2");
  check_range(g.r1_min, g.r1_max, "r1");
  check_range(g.t_min, g.t_max, "t");
  if (g.r1_min <= 0.0 || g.t_min <= 0.0) throw UsageError("r1 and t ranges must be positive");
  if (g.r1_points < 2 || g.t_points < 2) throw UsageError("grid needs at least 2 points per axis");
  const kernel::ModeParams m(g.n, g.a);
  csv.comment("nu", cli::number(m.nu));
  csv.header({"r1", "t", "region", "value"});
  for (int j = 0; j < g.t_points; ++j) {
    const double t = g.t_min + (g.t_max - g.t_min) * j / (g.t_points - 1);
    for (int i = 0; i < g.r1_points; ++i) {
      const double r1 = g.r1_min + (g.r1_max - g.r1_min) * i / (g.r1_points - 1);
      const kernel::KernelPoint p(r1, g.r2, t);
      const auto region = kernel::classify_region(p);
      const bool on_cone = region == kernel::Region::MainCone || region == kernel::Region::DiffractiveCone;
      csv.row({r1, t, kernel::to_string(region), on_cone ? nan_value : kernel::mode_kernel(m, p)});
    }
  }
  return 0;
}

struct FrontArgs {
  double a = 0.25;
  int n = 0;
  double r2 = 1.0, t = 2.0;
};

int run_front_scan(const FrontArgs& f, CsvWriter& csv) {
  const kernel::ModeParams m(f.n, f.a);
  const auto res = kernel::cone_limits(m, f.r2, f.t);
  csv.comment("predicted_jump", cli::number(kernel::diffractive_jump(m, f.t - f.r2, f.r2)));
  csv.header({"delta", "region_two", "region_three", "difference", "extrapolated_jump"});
  for (const auto& s : res.samples) csv.row({s.delta, s.two_side, s.three_side, s.difference, s.extrapolated});
  return 0;
}

struct ModeTableArgs {
  double a = 3.0;
  int n_max = 3;
  double r2 = 1.0, t = 2.0;
};

int run_mode_table(const ModeTableArgs& mt, CsvWriter& csv) {
  if (mt.n_max < 0) throw UsageError("--n-max must be >= 0");
  csv.header({"n", "nu", "jump_nonzero", "predicted_jump", "measured_jump"});
  for (int n = 0; n <= mt.n_max; ++n) {
    const kernel::ModeParams m(n, mt.a);
    csv.row({static_cast<std::int64_t>(n), m.nu, kernel::is_mode_jump_nonzero(n, mt.a),
             kernel::diffractive_jump(m, mt.t - mt.r2, mt.r2), kernel::cone_limits(m, mt.r2, mt.t).jump_estimate});
  }
  return 0;
}

struct OracleArgs {
  double a = 0.25;
  int n = 0;
  double dr = 1e-3;
  double tol = 0.02;
};

int run_oracle_compare(const OracleArgs& o, CsvWriter& csv) {
  check_positive(o.dr, "dr");
  check_positive(o.tol, "tol");
  const kernel::ModeParams m(o.n, o.a);
  const auto rep = oracle::compare_kernel(m, oracle::FDConfig::standard(m.nu, o.dr, 2.5, 4.0),
                                          verify::detail::interior_points());
  csv.comment("max_rel", cli::number(rep.max_rel));
  csv.comment("mean_rel", cli::number(rep.mean_rel));
  csv.header({"r1", "t", "region", "analytic", "numeric", "rel_err"});
  for (const auto& e : rep.points) csv.row({e.r1, e.t, kernel::to_string(e.region), e.analytic, e.numeric, e.rel_err});
  return rep.max_rel < o.tol ? 0 : 1;
}

struct TraceArgs {
  std::string metric = "circle";
  std::string system = "full";
  double r0 = 2.0, tau = 1.0, zeta = 1.0, zeta2 = 0.0, theta1 = 1.0, theta2 = 0.0;
  double xi = nan_value;  // default: incoming point on the characteristic set
  double span = 4.0, step = 1e-4;
  int every = 100;
};

int run_trace(const TraceArgs& tr, CsvWriter& csv) {
  check_positive(tr.r0, "r0");
  check_positive(tr.step, "step");
  if (tr.every < 1) throw UsageError("--every must be >= 1");
  if (tr.system != "full" && tr.system != "rescaled") throw UsageError("--system must be full or rescaled");
  const auto g = geodesic::make_metric(tr.metric);
  geodesic::FlowState s0;
  s0.r = tr.r0;
  s0.tau = tr.tau;
  s0.theta = {tr.theta1, tr.theta2};
  s0.zeta = {tr.zeta, g->dim() > 1 ? tr.zeta2 : 0.0};
  if (std::isnan(tr.xi)) {
    const double d = tr.r0 * tr.r0 * tr.tau * tr.tau - geodesic::zeta_norm_sq(s0, *g);
    if (d < 0.0) throw UsageError("no point of the characteristic set with this r0, tau and zeta; pass --xi");
    s0.xi = std::sqrt(d);
  } else {
    s0.xi = tr.xi;
  }
  const auto sys = tr.system == "full" ? geodesic::FlowSystem::full : geodesic::FlowSystem::rescaled;
  const auto t = geodesic::integrate_flow(s0, *g, tr.span, tr.step, sys);
  csv.comment("status", t.status == geodesic::FlowStatus::origin_reached ? "origin_reached" : "completed");
  csv.comment("min_r", cli::number(t.min_r()));
  csv.comment("sigma_drift", cli::number(t.max_sigma_drift()));
  csv.header({"s", "t", "r", "theta1", "theta2", "xi", "zeta1", "zeta2", "sigma", "xi_hat"});
  const auto profile = geodesic::xi_hat_profile(t);
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    if (i % static_cast<std::size_t>(tr.every) != 0 && i + 1 != t.states.size()) continue;
    const auto& st = t.states[i];
    csv.row({t.s[i], st.t, st.r, st.theta[0], st.theta[1], st.xi, st.zeta[0], st.zeta[1], t.sigma[i],
             profile[i].xi_hat});
  }
  return 0;
}

struct EnergyArgs {
  int n = 3;
  int count = 20;
  std::string potential = "zonal-mix";
  double c = 1.0;
};

int run_energy_audit(const EnergyArgs& e, std::uint64_t seed, CsvWriter& csv) {
  if (e.n < 3 || e.n > 8) throw UsageError("--n must be in 3..8");
  if (e.count < 1) throw UsageError("--count must be >= 1");
  energy::PotentialProfile f;
  if (e.potential == "const") f = energy::PotentialProfile::constant_value(e.c);
  else if (e.potential == "zonal-mix")
    f = energy::PotentialProfile::zonal([](double r, double z) { return 0.2 * z * z + 0.1 * std::cos(r) * z; }, 0.3,
                                        -0.1, "zonal-mix");
  else throw UsageError("--potential must be const or zonal-mix");
  csv.header({"index", "hardy_ratio", "hardy_bound", "hardy_ok", "delta_sq", "c1", "c2", "grad", "Q", "c1_ok",
              "c2_ok"});
  bool ok = true;
  const auto suite = energy::random_suite(e.n, e.count, seed);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto h = energy::hardy_check(suite[i]);
    const auto ne = energy::norm_equivalence_check(suite[i], f);
    ok &= h.holds && ne.c1_ok && ne.c2_ok;
    csv.row({static_cast<std::int64_t>(i), h.ratio, h.bound, h.holds, ne.delta_sq, ne.c1, ne.c2, ne.grad, ne.Q,
             ne.c1_ok, ne.c2_ok});
  }
  return ok ? 0 : 1;
}

struct SymbolArgs {
  double C = 1.0, delta = 0.1, alpha = 2.0, t0 = 0.0, tau0 = 1.0;
  int target = 10000;
  double sigma_band = 0.0;
  bool find_alpha = false;
  bool samples = false;
};

int run_symbol_audit(const SymbolArgs& s, CsvWriter& csv) {
  if (s.target < 1) throw UsageError("--target must be >= 1");
  if (s.sigma_band < 0.0) throw UsageError("--sigma-band must be >= 0");
  energy::CommutantParams p{s.C, s.delta, s.alpha, s.t0, s.tau0};
  p.validate();
  energy::SignAuditConfig cfg;
  cfg.target = static_cast<std::size_t>(s.target);
  cfg.sigma_band = s.sigma_band;
  if (s.find_alpha) {
    const auto search = energy::find_alpha_star(p, cfg);
    p.alpha = search.alpha_star;
    csv.comment("alpha_star", cli::number(search.alpha_star));
    csv.comment("alpha_closed_form", cli::number(search.alpha_analytic));
  }
  const auto r = energy::sign_audit(p, cfg, s.samples);
  csv.comment("alpha", cli::number(p.alpha));
  csv.comment("counted", std::to_string(r.counted));
  csv.comment("violations", std::to_string(r.violations));
  csv.comment("max_value", cli::number(r.max_value));
  csv.comment("fd_checked", std::to_string(r.fd_checked));
  csv.comment("fd_max_diff", cli::number(r.fd_max_diff));
  if (s.samples) {
    csv.header({"t", "r", "tau", "xi_hat", "zeta_hat", "class", "value", "main", "g_xi", "g_r", "g_t", "e1", "e2"});
    for (const auto& smp : r.samples) {
      const auto& x = smp.point;
      const auto& d = smp.derivative;
      csv.row({x.t, x.r, x.tau, x.xi / x.tau, x.zeta[0] / x.tau, std::string(energy::to_string(d.cls)), d.value,
               d.main, d.g_xi, d.g_r, d.g_t, d.e1, d.e2});
    }
  } else {
    csv.header({"class", "count"});
    for (int k = 0; k < 6; ++k) {
      csv.row({std::string(energy::to_string(static_cast<energy::SymbolClass>(k))),
               static_cast<std::int64_t>(r.by_class[k])});
    }
  }
  const bool ok = r.violations == 0 && r.counted >= cfg.target && r.fd_max_diff < 1e-6;
  return ok ? 0 : 1;
}

int run_verify(bool quick, std::ostream& os) {
  const auto tier = quick ? verify::Tier::quick : verify::Tier::full;
  os << "# verify tier=" << (quick ? "quick" : "full") << '\n';
  const auto results = verify::run_suite(tier, [&](const verify::CriterionResult& r) {
    os << verify::format_line(r) << '\n' << std::flush;
  });
  const bool expected = verify::outcome_as_expected(results);
  os << "# outcome " << (expected ? "as expected" : "UNEXPECTED") << " (known failures:";
  for (int id : verify::known_failures()) os << ' ' << id;
  os << ")\n";
  return expected ? 0 : 1;
}

// Fills options that were not given on the command line from the config file.
void apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : cli::read_config(path)) {
    if (key == "config") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown config key '" + key + "' for " + sub.get_name());
    if (opt->count() > 0) continue;
    opt->add_result(value);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffraction by an inverse-square potential: kernels, oracles, flows and energy checks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  Common common;
  app.add_option("-o,--output", common.output, "Output file (default stdout)");
  app.add_option("--config", common.config, "Config file of key = value lines (flags take precedence)");
  app.add_option("--seed", common.seed_text, "Random seed, decimal or 0x hex");
  app.add_flag("--reproducible", common.reproducible, "Omit the timestamp metadata line");

  SpecfunArgs sf;
  auto* c_specfun = app.add_subcommand("specfun", "Tabulate J_nu(x) or Q_{nu-1/2}(x)");
  c_specfun->add_option("--nu", sf.nu, "Order")->check(CLI::NonNegativeNumber);
  c_specfun->add_option("--function", sf.function)->check(CLI::IsMember({"bessel_j", "legendre_q"}));
  c_specfun->add_option("--x-min", sf.x_min);
  c_specfun->add_option("--x-max", sf.x_max);
  c_specfun->add_option("--points", sf.points);

  HankelArgs hk;
  auto* c_hankel = app.add_subcommand("hankel-check", "Involution and Plancherel defects under refinement");
  c_hankel->add_option("--nu", hk.nu)->check(CLI::NonNegativeNumber);
  c_hankel->add_option("--r-max", hk.r_max);
  c_hankel->add_option("--intervals", hk.intervals);
  c_hankel->add_option("--refinements", hk.refinements);
  c_hankel->add_option("--tol", hk.tol);

  KernelGridArgs kg;
  auto* c_grid = app.add_subcommand("kernel-grid", "Mode kernel K_n(r1, r2, t) on a grid");
  c_grid->add_option("--a", kg.a)->check(CLI::NonNegativeNumber);
  c_grid->add_option("--n", kg.n);
  c_grid->add_option("--r2", kg.r2);
  c_grid->add_option("--r1-min", kg.r1_min);
  c_grid->add_option("--r1-max", kg.r1_max);
  c_grid->add_option("--r1-points", kg.r1_points);
  c_grid->add_option("--t-min", kg.t_min);
  c_grid->add_option("--t-max", kg.t_max);
  c_grid->add_option("--t-points", kg.t_points);

  FrontArgs fs;
  auto* c_front = app.add_subcommand("front-scan", "One-sided limits across the diffractive front");
  c_front->add_option("--a", fs.a)->check(CLI::NonNegativeNumber);
  c_front->add_option("--n", fs.n);
  c_front->add_option("--r2", fs.r2);
  c_front->add_option("--t", fs.t);

  ModeTableArgs mt;
  auto* c_modes = app.add_subcommand("mode-table", "Jump condition and jump values per mode");
  c_modes->add_option("--a", mt.a)->check(CLI::NonNegativeNumber);
  c_modes->add_option("--n-max", mt.n_max);
  c_modes->add_option("--r2", mt.r2);
  c_modes->add_option("--t", mt.t);

  OracleArgs oc;
  auto* c_oracle = app.add_subcommand("oracle-compare", "Finite-difference solve against the analytic kernel");
  c_oracle->add_option("--a", oc.a)->check(CLI::NonNegativeNumber);
  c_oracle->add_option("--n", oc.n);
  c_oracle->add_option("--dr", oc.dr);
  c_oracle->add_option("--tol", oc.tol);

  TraceArgs tr;
  auto* c_trace = app.add_subcommand("trace", "Integrate a bicharacteristic");
  c_trace->add_option("--metric", tr.metric)->check(CLI::IsMember({"circle", "s2"}));
  c_trace->add_option("--system", tr.system)->check(CLI::IsMember({"full", "rescaled"}));
  c_trace->add_option("--r0", tr.r0);
  c_trace->add_option("--tau", tr.tau);
  c_trace->add_option("--xi", tr.xi, "Initial xi (default: incoming, on the characteristic set)");
  c_trace->add_option("--zeta", tr.zeta);
  c_trace->add_option("--zeta2", tr.zeta2, "Second fiber component (s2 only)");
  c_trace->add_option("--theta1", tr.theta1);
  c_trace->add_option("--theta2", tr.theta2);
  c_trace->add_option("--span", tr.span);
  c_trace->add_option("--step", tr.step);
  c_trace->add_option("--every", tr.every, "Write every k-th state");

  EnergyArgs en;
  auto* c_energy = app.add_subcommand("energy-audit", "Hardy and norm-equivalence checks on random test functions");
  c_energy->add_option("--n", en.n, "Space dimension");
  c_energy->add_option("--count", en.count);
  c_energy->add_option("--potential", en.potential)->check(CLI::IsMember({"const", "zonal-mix"}));
  c_energy->add_option("--c", en.c, "Value of the constant potential");

  SymbolArgs sy;
  auto* c_symbol = app.add_subcommand("symbol-audit", "Sign audit of the commutant's Hamilton derivative");
  c_symbol->add_option("--C", sy.C);
  c_symbol->add_option("--delta", sy.delta);
  c_symbol->add_option("--alpha", sy.alpha);
  c_symbol->add_option("--t0", sy.t0);
  c_symbol->add_option("--tau0", sy.tau0);
  c_symbol->add_option("--target", sy.target);
  c_symbol->add_option("--sigma-band", sy.sigma_band, "Half-width of the sampled band in sigma_Sigma (0 = on Sigma)");
  c_symbol->add_flag("--find-alpha", sy.find_alpha, "Bisect for the smallest passing alpha first");
  c_symbol->add_flag("--samples", sy.samples, "Write every counted sample instead of class totals");

  bool quick = false;
  auto* c_verify = app.add_subcommand("verify", "Run the acceptance suite");
  c_verify->add_flag("--quick", quick, "Smaller sample counts, no runtime budgets");

  for (auto* sub : app.get_subcommands({})) {
    sub->option_defaults()->always_capture_default();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!common.config.empty()) apply_config(app, *sub, common.config);
    Sink sink(common.output);
    std::ostream& os = sink.stream();
    if (sub == c_verify) return run_verify(quick, os);

    CsvWriter csv(os);
    csv.metadata(parameters(*sub, common), common.reproducible);
    if (sub == c_specfun) return run_specfun(sf, csv);
    if (sub == c_hankel) return run_hankel_check(hk, csv);
    if (sub == c_grid) return run_kernel_grid(kg, csv);
    if (sub == c_front) return run_front_scan(fs, csv);
    if (sub == c_modes) return run_mode_table(mt, csv);
    if (sub == c_oracle) return run_oracle_compare(oc, csv);
    if (sub == c_trace) return run_trace(tr, csv);
    if (sub == c_energy) return run_energy_audit(en, common.seed(), csv);
    if (sub == c_symbol) return run_symbol_audit(sy, csv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const diffract::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
