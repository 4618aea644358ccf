// Acceptance suite: one PASS/FAIL line per criterion 1-11 with the
// tolerances and runtime budgets pinned below.
//
//   acceptance [--only N]... [--expect-fail N]...
//
// Exit status is 0 when every selected criterion passes, except those named
// with --expect-fail, which must fail. A known failure still prints FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "anich/config.hpp"
#include "anich/diagnostics.hpp"
#include "anich/runner.hpp"
#include "anich/time_operators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace anich;
using testing_support::Gen;
using testing_support::max_diff;

namespace {

// ---- pinned tolerances and budgets (seconds) ----
constexpr double kGammaStarOne = 4.8645365123;
constexpr double kGammaStarTol = 1e-6;
constexpr double kOrderLo = 1.8, kOrderHi = 2.3;
constexpr double kMassTol = 1e-10;
constexpr double kEnergyTol = 1e-10;        // times (1 + |E|)
constexpr double kTotalEnergyTol = 1e-10;   // times (1 + |E|), criterion 6
constexpr double kIdentityTol = 1e-12;
constexpr double kDegenerationTol = 1e-14;  // times (1 + |value|)
constexpr double kDenseTol = 1e-10;
constexpr double kGateauxDecades = 1.8;     // per decade of h: O(h^2) gives 2
constexpr double kXiSlope = 1.0, kXiSlopeTol = 0.3;
constexpr int kNewtonMax = 10;
constexpr double kMmsHorizon = 0.2;
const std::vector<double> kMmsTaus{1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ----
Outcome gamma_star_value() {
  const double g1 = gamma_star(1.0), gh = gamma_star(0.5);
  return {std::abs(g1 - kGammaStarOne) <= kGammaStarTol && std::isinf(gh),
          "gamma*(1) = " + fmt("%.12f", g1) + ", gamma*(1/2) = " + fmt("%g", gh)};
}

// ---- 2 and 3 ----
ConvergenceSetup mms_setup(double theta, double alpha, double s1, double s2) {
  ConvergenceSetup c;
  c.scheme = Scheme::UL;
  c.theta = theta;
  c.alpha = alpha;
  c.s1 = s1;
  c.s2 = s2;
  c.taus = kMmsTaus;
  c.horizon = kMmsHorizon;
  c.n = 128;
  return c;
}

Outcome mms_order() {
  bool ok = true;
  std::string detail = "finest-three-pair orders:";
  for (double alpha : {0.0, 0.05}) {
    for (double theta : {0.5, 0.75, 1.0}) {
      const ConvergenceReport rep = run_convergence(mms_setup(theta, alpha, 0.0, 4.0));
      detail += " [a=" + fmt("%g", alpha) + " th=" + fmt("%g", theta);
      for (std::size_t i = rep.orders.size() - 3; i < rep.orders.size(); ++i) {
        ok = ok && rep.orders[i] >= kOrderLo && rep.orders[i] <= kOrderHi;
        detail += " " + fmt("%.3f", rep.orders[i]);
      }
      detail += "]";
      ok = ok && rep.complete();
    }
  }
  return {ok, detail};
}

Outcome stabilization_ablation() {
  bool unstabilized_incomplete = false, stabilized_complete = true;
  std::string detail;
  for (double theta : {0.5, 0.75, 1.0}) {
    const ConvergenceReport off = run_convergence(mms_setup(theta, 0.3, 0.0, 0.0));
    const ConvergenceReport on = run_convergence(mms_setup(theta, 0.3, 4.0, 4.0));
    unstabilized_incomplete = unstabilized_incomplete || !off.complete();
    stabilized_complete = stabilized_complete && on.complete();
    detail += " th=" + fmt("%g", theta) + ": S=0 coarsest err " + fmt("%.3g", off.errors.front()) +
              (off.complete() ? " (complete)" : " (incomplete)") + ", S=4 coarsest err " +
              fmt("%.3g", on.errors.front()) + (on.complete() ? " (complete)" : " (incomplete)") + ";";
  }
  return {unstabilized_incomplete && stabilized_complete, "S=0 incomplete: " +
                                                               std::string(unstabilized_incomplete ? "yes" : "no") +
                                                               ";" + detail};
}

// ---- shared run loop for 4-6 ----
struct RunStats {
  double max_mass = 0.0;
  double max_modified_rise = -std::numeric_limits<double>::infinity();  // relative to 1 + |E|
  double max_total_rise = -std::numeric_limits<double>::infinity();
  int components_start = -1, components_end = -1;
  std::string failure;
};

RunStats simulate(const RunConfig& cfg, bool track_total_energy = false, bool count_regions = false) {
  RunStats st;
  const Field phi0 = build_initial(cfg);
  try {
    Simulation sim(phi0, cfg.model, cfg.scheme, cfg.step_sequence());
    double prev_mod = sim.observe().energy_modified;
    double prev_total = total_energy(sim.phi(), sim.model());
    if (count_regions) st.components_start = count_components(sim.phi());
    const bool uniform = !is_variable(cfg.scheme.kind);
    while (!sim.done()) {
      sim.step();
      const DiagRecord r = sim.observe();
      st.max_mass = std::max(st.max_mass, std::abs(r.rel_mass_err));
      // uniform: the bound covers BDF2 steps, i.e. from the second step on
      if (!uniform || sim.steps_taken() >= 2)
        st.max_modified_rise = std::max(st.max_modified_rise, (r.energy_modified - prev_mod) / (1 + std::abs(prev_mod)));
      prev_mod = r.energy_modified;
      if (track_total_energy) {
        st.max_total_rise = std::max(st.max_total_rise, (r.energy_original - prev_total) / (1 + std::abs(prev_total)));
        prev_total = r.energy_original;
      }
    }
    if (count_regions) st.components_end = count_components(sim.phi());
  } catch (const NumericalError& e) {
    st.failure = e.what();
  }
  return st;
}

RunConfig preset_with(const std::string& name, Scheme kind, double theta, double alpha) {
  RunConfig c = parse_config(find_preset(name)->text);
  c.scheme.kind = kind;
  c.scheme.uniform.theta = c.scheme.variable.theta = theta;
  c.model.alpha = alpha;
  if (is_variable(kind) && c.steps.kind == StepKind::Uniform) {
    c.steps.kind = StepKind::RandomAdmissible;
    c.steps.tau_max = c.steps.tau;
  }
  if (!is_variable(kind)) c.steps.kind = StepKind::Uniform;
  return c;
}

const char* kSchemes[] = {"UL", "UW", "VL", "VW"};

// ---- 4 ----
Outcome mass_conservation() {
  bool ok = true;
  double worst = 0.0;
  std::string failures;
  std::vector<std::pair<std::string, RunConfig>> runs;
  for (const char* s : kSchemes) {
    const Scheme k = *parse_scheme(s);
    const char* e2 = is_variable(k) ? "example2_VL_" : "example2_UL_";
    for (const char* ic : {"abssin", "random"})
      runs.emplace_back(std::string("ex2 ") + ic + " " + s,
                        preset_with(std::string(e2) + ic + "_alpha005", k, 0.75, 0.05));
    runs.emplace_back(std::string("ex3 ") + s,
                      preset_with(is_variable(k) ? "example3_VL_alpha005" : "example3_UL_alpha005", k, 0.75, 0.05));
  }
  for (const auto& [label, cfg] : runs) {
    const RunStats st = simulate(cfg);
    if (!st.failure.empty()) failures += " " + label + ": " + st.failure + ";";
    ok = ok && st.failure.empty() && st.max_mass <= kMassTol;
    worst = std::max(worst, st.max_mass);
  }
  return {ok, std::to_string(runs.size()) + " runs, max |rel mass err| = " + fmt("%.3e", worst) + failures};
}

// ---- 5 ----
Outcome energy_dissipation() {
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  int count = 0;
  std::string failures;
  for (const char* s : kSchemes) {
    const Scheme k = *parse_scheme(s);
    for (const char* ic : {"abssin", "random"}) {
      for (double theta : {0.5, 0.75, 1.0}) {
        for (double alpha : {0.0, 0.05, 0.3}) {
          const std::string base = std::string(is_variable(k) ? "example2_VL_" : "example2_UL_") + ic + "_alpha0";
          RunConfig cfg = preset_with(base, k, theta, alpha);
          const RunStats st = simulate(cfg);
          ++count;
          const bool pass = st.failure.empty() && st.max_modified_rise <= kEnergyTol;
          if (!pass)
            failures += std::string(" ") + s + " " + ic + " th=" + fmt("%g", theta) + " a=" + fmt("%g", alpha) + ": " +
                        (st.failure.empty() ? "rise " + fmt("%.3e", st.max_modified_rise) : st.failure) + ";";
          ok = ok && pass;
          worst = std::max(worst, st.max_modified_rise);
        }
      }
    }
  }
  return {ok, std::to_string(count) + " runs, max relative per-step rise = " + fmt("%.3e", worst) + failures};
}

// ---- 6 ----
Outcome coarsening() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"example3_UL_alpha0", "example3_UL_alpha005", "example3_UL_alpha01"}) {
    const RunConfig cfg = parse_config(find_preset(name)->text);
    const RunStats st = simulate(cfg, true, true);
    const bool pass = st.failure.empty() && st.components_start == 2 && st.components_end == 1 &&
                      st.max_total_rise <= kTotalEnergyTol;
    ok = ok && pass;
    detail += std::string(" ") + name + ": components " + std::to_string(st.components_start) + " -> " +
              std::to_string(st.components_end) + ", max total-energy rise " + fmt("%.2e", st.max_total_rise) +
              (st.failure.empty() ? "" : ", " + st.failure) + ";";
  }
  return {ok, detail};
}

// ---- 7 ----
Outcome telescoping_identity() {
  Gen gen(701);
  double scalar = 0.0, field = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto [l, r] = lemma31_remainder(gen.theta(), gen.uniform(-3, 3), gen.uniform(-3, 3), gen.uniform(-3, 3));
    scalar = std::max(scalar, std::abs(l - r));
  }
  const GridPtr g = build_grid(2, 16);
  for (int i = 0; i < 100; ++i) {
    const auto [l, r] = lemma31_remainder(gen.theta(), gen.noise(g), gen.noise(g), gen.noise(g));
    field = std::max(field, std::abs(l - r) / (1 + std::abs(l)));
  }
  return {scalar <= kIdentityTol && field <= kIdentityTol,
          "max |lhs - rhs|: scalar " + fmt("%.2e", scalar) + ", field (relative) " + fmt("%.2e", field)};
}

// ---- 8 ----
Outcome variable_inequality() {
  Gen gen(801);
  double worst = -std::numeric_limits<double>::infinity();
  int n = 0;
  for (int k = 0; k <= 5; ++k) {
    const double theta = 0.5 + 0.1 * k;
    const double cap = std::min(gamma_star(theta), 10.0);
    for (int i = 0; i < 10000 / 6 + 1; ++i, ++n) {
      const double g1 = gen.uniform(1e-3, cap), g2 = gen.uniform(0.0, cap), tau = gen.uniform(1e-3, 1.0);
      const auto [lhs, rhs] =
          lemma41_terms(theta, g1, g2, tau, gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1));
      worst = std::max(worst, (rhs - lhs) / (1 + std::abs(lhs) + std::abs(rhs)));
    }
  }
  return {worst <= kIdentityTol, std::to_string(n) + " samples, max scaled violation " + fmt("%.2e", worst)};
}

// ---- 9 ----
Outcome degeneration_and_dense() {
  Gen gen(901);
  const GridPtr g2 = build_grid(2, 16);
  double degen = 0.0;
  for (int k = 0; k <= 5; ++k) {
    const double theta = 0.5 + 0.1 * k;
    for (int i = 0; i < 10; ++i) {
      const double tau = gen.uniform(1e-3, 1.0);
      const Field a = gen.noise(g2), b = gen.noise(g2), c = gen.noise(g2);
      const Field v = vbdf2_apply(theta, tau, 1.0, a, b, c);
      const Field w = wsbdf2_apply(theta, tau, a, b, c);
      degen = std::max(degen, max_diff(v, w) / (1 + w.max_abs()));
    }
  }

  const GridPtr g = build_grid(1, 8);
  double dense = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams mp;
    mp.alpha = gen.uniform(0.0, 0.3);
    mp.beta = gen.uniform(0.0, 0.05);
    const Field phi0 = gen.smooth(g, 3, 0.8);
    const Field src = gen.smooth(g, 2, 0.3);
    auto source = [&](double) { return src; };

    UniformSchemeParams us;
    us.theta = gen.theta();
    us.tau = gen.uniform(1e-3, 5e-2);
    const UniformState u0 = initial_uniform_state(phi0, mp, us, UniformMethod::UL);
    const UniformState u1 = bootstrap_bdf1(phi0, mp, us, UniformMethod::UL, source);
    const UniformState u2 = step_UL(u1, mp, us, source);
    const auto d1 = testing_support::dense_uniform_step(u0, mp, us, UniformMethod::UL, true, src);
    const auto d2 = testing_support::dense_uniform_step(u1, mp, us, UniformMethod::UL, false, src);
    dense = std::max({dense, max_diff(u1.phi_n, d1.phi), max_diff(u2.phi_n, d2.phi),
                      std::abs(u2.r_n - d2.r) / (1 + std::abs(d2.r))});

    VariableSchemeParams vs;
    vs.theta = gen.theta();
    vs.sav.c0 = 1e3;
    const double tau1 = gen.uniform(1e-3, 1e-2), tau2 = tau1 * gen.uniform(0.3, 3.0);
    const VariableState v0 = initial_variable_state(phi0, mp, vs, VariableMethod::VL);
    const VariableState v1 = bootstrap_variable(phi0, mp, vs, VariableMethod::VL, tau1, source);
    const VariableState v2 = step_VL(v1, mp, vs, tau2, source);
    const auto e1 = testing_support::dense_variable_check(v0, v1, mp, vs, VariableMethod::VL, tau1, true, src);
    const auto e2 = testing_support::dense_variable_check(v1, v2, mp, vs, VariableMethod::VL, tau2, false, src);
    dense = std::max({dense, e1.phi_err, e2.phi_err, std::abs(e2.u_residual) / v2.sqrt_energy});
  }
  return {degen <= kDegenerationTol && dense <= kDenseTol,
          "vbdf2(gamma=1) vs wsbdf2 " + fmt("%.2e", degen) + ", dense oracle max diff " + fmt("%.2e", dense)};
}

// ---- 10 ----
Outcome gateaux() {
  const GridPtr g = build_grid(2, 32);
  Gen gen(1001);
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 0.05, 0.3}) {
    ModelParams mp;
    mp.alpha = alpha;
    SavParams sav;
    sav.lambda1 = 0.5;
    sav.lambda2 = 0.3;
    sav.lambda3 = 1e-4;
    // phi near the well at +1 keeps E small, so the h = 1e-5 quotient stays
    // above roundoff; f''' = 6 keeps the h^2 term O(1).
    Field phi = gen.smooth(g, 3, 0.2);
    phi += 0.9;
    Field dir = gen.smooth(g, 3);
    dir += 0.7;
    // Smallest constant that keeps the shifted energies positive: a large one
    // would bury the h = 1e-5 difference quotient in roundoff.
    {
      SavParams probe = sav;
      probe.c0 = 1e6;
      const double raw = std::min(sav_linear_variable(phi, mp, probe).energy, sav_willmore_variable(phi, mp, probe).energy) - 1e6;
      sav.c0 = 1.0 + 2.0 * std::max(0.0, -raw);
    }
    auto check = [&](auto&& energy, double analytic) {
      double e[3];
      const double hs[3] = {1e-3, 1e-4, 1e-5};
      for (int i = 0; i < 3; ++i) {
        Field p = phi, m = phi;
        p.axpy(hs[i], dir);
        m.axpy(-hs[i], dir);
        e[i] = std::abs((energy(p) - energy(m)) / (2 * hs[i]) - analytic);
      }
      const double d = std::min(std::log10(e[0] / e[1]), std::log10(e[1] / e[2]));
      worst = std::min(worst, d);
      ok = ok && d >= kGateauxDecades;
    };
    const SavTerm h = sav_linear_uniform(phi, mp, sav);
    check([&](const Field& u) { return sav_linear_uniform(u, mp, sav).energy; }, inner(std::sqrt(h.energy) * h.force, dir));
    const SavTerm hv = sav_linear_variable(phi, mp, sav);
    check([&](const Field& u) { return sav_linear_variable(u, mp, sav).energy; }, inner(hv.force, dir));
    const SavTerm zv = sav_willmore_variable(phi, mp, sav);
    check([&](const Field& u) { return sav_willmore_variable(u, mp, sav).energy; }, inner(zv.force, dir));
  }
  return {ok, "smallest error decay per decade of h: " + fmt("%.3f", worst)};
}

// ---- 11 ----
Outcome xi_behavior() {
  bool ok = true;
  std::string detail;
  for (double theta : {0.75, 1.0}) {
    ConvergenceSetup c;
    c.scheme = Scheme::VL;
    c.theta = theta;
    c.alpha = 0.05;
    c.horizon = kMmsHorizon;
    c.step_kind = StepKind::RandomAdmissible;
    c.seed = 7;
    std::vector<double> lx, ly;
    int newton = 0;
    for (double tau_max : {2e-3, 1e-3, 5e-4}) {
      const MmsRun r = run_mms(c, tau_max);
      if (!r.failure.empty()) {
        ok = false;
        detail += " th=" + fmt("%g", theta) + " failed: " + r.failure + ";";
        continue;
      }
      lx.push_back(std::log(r.max_tau));
      ly.push_back(std::log(r.max_xi_deviation));
      newton = std::max(newton, r.max_newton_iters);
    }
    if (lx.size() != 3) continue;
    const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    ok = ok && std::abs(slope - kXiSlope) <= kXiSlopeTol && newton <= kNewtonMax;
    detail += " th=" + fmt("%g", theta) + ": slope " + fmt("%.3f", slope) + ", max Newton " + std::to_string(newton) +
              ", max|xi-1| at finest " + fmt("%.2e", std::exp(ly.back())) + ";";
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    if (i + 1 < argc && std::strcmp(argv[i], "--only") == 0) only.insert(std::atoi(argv[++i]));
    else if (i + 1 < argc && std::strcmp(argv[i], "--expect-fail") == 0) expect_fail.insert(std::atoi(argv[++i]));
    else {
      std::fprintf(stderr, "usage: acceptance [--only N]... [--expect-fail N]...\n");
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "gamma* value", 1.0, gamma_star_value},
      {2, "manufactured-solution order, U_L", 120.0, mms_order},
      {3, "stabilization ablation", 120.0, stabilization_ablation},
      {4, "mass conservation, examples 2-3", 300.0, mass_conservation},
      {5, "energy dissipation, example 2", 600.0, energy_dissipation},
      {6, "2D coarsening, example 3", 900.0, coarsening},
      {7, "telescoping identity", 1.0, telescoping_identity},
      {8, "variable-step inequality", 1.0, variable_inequality},
      {9, "degeneration and dense oracle", 10.0, degeneration_and_dense},
      {10, "Gateaux derivatives", 10.0, gateaux},
      {11, "relaxation xi behavior", 60.0, xi_behavior},
  };

  bool as_expected = true;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += " (over the " + fmt("%g", c.budget_s) + " s budget)";
    }
    const bool expected_fail = expect_fail.count(c.id) > 0;
    std::printf("criterion %2d %s  %-36s %8.2f s  %s%s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs,
                o.detail.c_str(), expected_fail && !o.pass ? "  [known failure]" : "");
    std::fflush(stdout);
    as_expected = as_expected && (o.pass != expected_fail);
  }
  return as_expected ? 0 : 1;
}
