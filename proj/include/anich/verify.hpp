#pragma once

// A fast invariant suite behind `anich verify`: a few seconds of checks a
// user can run after building on a new machine.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "anich/config.hpp"
#include "anich/diagnostics.hpp"
#include "anich/runner.hpp"
#include "anich/time_operators.hpp"

namespace anich {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

inline std::vector<CheckResult> verify_invariants() {
  std::vector<CheckResult> out;

  {
    const double g = gamma_star(1.0);
    out.push_back({"gamma*(1)", std::abs(g - 4.8645365123) < 1e-6 && std::isinf(gamma_star(0.5)),
                   "gamma*(1) = " + format_double(g)});
  }

  {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0), th(0.5, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto [l, r] = lemma31_remainder(th(rng), u(rng), u(rng), u(rng));
      worst = std::max(worst, std::abs(l - r));
    }
    out.push_back({"G-norm telescoping identity", worst <= 1e-12, "max |lhs - rhs| = " + detail::sci(worst)});
  }

  // Mass and modified energy on a short 1D noise run for each scheme.
  for (Scheme s : {Scheme::UL, Scheme::UW, Scheme::VL, Scheme::VW}) {
    RunConfig c = parse_config(
        "model.epsilon = 0.2\nmodel.alpha = 0.05\ngrid.n = 64\nscheme.theta = 0.75\nsteps.T = 0.02\n"
        "steps.tau = 1e-3\ninitial.kind = random_minus03\n");
    c.scheme.kind = s;
    if (is_variable(s)) {
      c.steps.kind = StepKind::RandomAdmissible;
      c.steps.tau_max = 1e-3;
    }
    const Field phi0 = build_initial(c);
    CheckResult r{"mass and energy, " + to_string(s), false, ""};
    try {
      Simulation sim(phi0, c.model, c.scheme, c.step_sequence());
      double mass = 0.0, rise = -1.0, prev = sim.observe().energy_modified;
      while (!sim.done()) {
        sim.step();
        const DiagRecord d = sim.observe();
        mass = std::max(mass, std::abs(d.rel_mass_err));
        // the uniform bootstrap step uses a different energy functional
        if (sim.steps_taken() > 1 || is_variable(s)) rise = std::max(rise, d.energy_modified - prev);
        prev = d.energy_modified;
      }
      r.pass = mass <= 1e-10 && rise <= 1e-10 * (1.0 + std::abs(prev));
      r.detail = "mass " + detail::sci(mass) + ", max energy rise " + detail::sci(rise);
    } catch (const NumericalError& e) {
      r.detail = e.what();
    }
    out.push_back(r);
  }

  {
    ConvergenceSetup c;
    c.horizon = 0.2;
    c.n = 64;
    c.taus = {2.5e-3, 1.25e-3};
    const ConvergenceReport rep = run_convergence(c);
    const bool ok = rep.complete() && std::abs(rep.orders[0] - 2.0) < 0.3;
    out.push_back({"manufactured solution order, U_L", ok,
                   "order " + (rep.orders.empty() ? std::string("-") : format_double(rep.orders[0]))});
  }

  {
    std::string bad;
    for (const Preset& p : presets()) {
      try {
        parse_config(p.text);
      } catch (const ConfigError& e) {
        bad += p.name + ": " + e.what() + "; ";
      }
    }
    out.push_back({"presets parse", bad.empty(), bad.empty() ? std::to_string(presets().size()) + " presets" : bad});
  }
  return out;
}

}  // namespace anich
