#pragma once

// Observables, the manufactured-solution test problem, a scheme-agnostic
// time-stepping driver and temporal convergence studies.

#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "anich/errors.hpp"
#include "anich/phase_model.hpp"
#include "anich/sav_uniform.hpp"
#include "anich/sav_variable.hpp"
#include "anich/spectral.hpp"
#include "anich/step_sequence.hpp"

namespace anich {

enum class Scheme { UL, UW, VL, VW };

inline bool is_variable(Scheme s) { return s == Scheme::VL || s == Scheme::VW; }
inline bool is_willmore(Scheme s) { return s == Scheme::UW || s == Scheme::VW; }

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::UL: return "UL";
    case Scheme::UW: return "UW";
    case Scheme::VL: return "VL";
    case Scheme::VW: return "VW";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  if (s == "UL") return Scheme::UL;
  if (s == "UW") return Scheme::UW;
  if (s == "VL") return Scheme::VL;
  if (s == "VW") return Scheme::VW;
  return std::nullopt;
}

/// Scheme choice plus parameters for both families; only the matching half is used.
/// uniform.tau is ignored: step sizes come from the StepSequence.
struct SchemeConfig {
  Scheme kind = Scheme::UL;
  UniformSchemeParams uniform{};
  VariableSchemeParams variable{};

  double theta() const { return is_variable(kind) ? variable.theta : uniform.theta; }
};

struct DiagRecord {
  double t = 0.0;
  double mass = 0.0;
  double rel_mass_err = 0.0;
  double energy_original = 0.0;
  double energy_modified = 0.0;
  std::optional<double> xi;
  std::optional<int> newton_iters;
  double dt = 0.0;
};

struct ConvergenceReport {
  std::vector<double> taus;
  std::vector<double> errors;  // +inf for a run that did not complete
  std::vector<double> orders;
  bool complete() const {
    for (double e : errors)
      if (!std::isfinite(e)) return false;
    return true;
  }
};

/// (mass - mass0) / |mass0|. When mass0 is at roundoff level relative to
/// `scale` (the L1 norm of phi0), the drift is measured against `scale`
/// instead; with scale = 0 and mass0 = 0 it is the absolute drift.
inline double relative_mass_error(double mass, double mass0, double scale = 0.0) {
  double denom = std::abs(mass0);
  if (denom <= 1e-8 * scale) denom = scale;
  return denom > 0.0 ? (mass - mass0) / denom : mass - mass0;
}

/// Fails with Diverged once ||phi||_inf exceeds this or a value is not finite.
inline constexpr double kDivergenceBound = 1e6;

/// Steps one of the four schemes through a StepSequence and reports
/// DiagRecords. The regularization of the model follows the scheme.
class Simulation {
 public:
  Simulation(const Field& phi0, ModelParams model, SchemeConfig scheme, StepSequence steps, Source source = {})
      : model_(model), scheme_(std::move(scheme)), steps_(std::move(steps)), source_(std::move(source)) {
    model_.regularization = is_willmore(scheme_.kind) ? Regularization::Willmore : Regularization::Linear;
    model_.validate();
    if (steps_.size() == 0) throw InvalidArgument("empty step sequence");
    mass0_ = integrate(phi0);
    Field magnitude = phi0;
    for (std::size_t p = 0; p < magnitude.size(); ++p) magnitude[p] = std::abs(magnitude[p]);
    mass_scale_ = integrate(magnitude);
    if (is_variable(scheme_.kind)) {
      scheme_.variable.validate();
      for (std::size_t k = 1; k < steps_.size(); ++k)
        if (steps_.ratio(k) > scheme_.variable.effective_gamma_cap() * (1.0 + 1e-12))
          throw InvalidArgument("step sequence exceeds the admissible ratio");
      state_ = initial_variable_state(phi0, model_, scheme_.variable, variable_method());
    } else {
      const double tau = steps_.taus[0];
      for (double t : steps_.taus)
        if (std::abs(t - tau) > 1e-12 * tau) throw InvalidArgument("uniform schemes need equal steps");
      scheme_.uniform.tau = tau;
      scheme_.uniform.validate();
      state_ = initial_uniform_state(phi0, model_, scheme_.uniform, uniform_method());
    }
  }

  bool done() const { return taken_ >= steps_.size(); }
  std::size_t steps_taken() const { return taken_; }
  const StepSequence& steps() const { return steps_; }
  const ModelParams& model() const { return model_; }
  const SchemeConfig& scheme() const { return scheme_; }

  const Field& phi() const {
    return std::visit([](const auto& s) -> const Field& { return s.phi_n; }, state_);
  }
  const Field& phi_previous() const {
    return std::visit([](const auto& s) -> const Field& { return s.phi_nm1; }, state_);
  }
  double t() const {
    return std::visit([](const auto& s) { return s.t; }, state_);
  }
  const VariableState* variable_state() const { return std::get_if<VariableState>(&state_); }
  const UniformState* uniform_state() const { return std::get_if<UniformState>(&state_); }

  /// Advances one step; throws NumericalError subclasses on failure.
  void step() {
    if (done()) throw InvalidArgument("no steps left");
    const std::size_t k = taken_;
    if (auto* u = std::get_if<UniformState>(&state_)) {
      const Field phi0 = u->phi_n;
      *u = k == 0 ? bootstrap_bdf1(phi0, model_, scheme_.uniform, uniform_method(), source_)
                  : step_uniform(*u, model_, scheme_.uniform, uniform_method(), source_);
    } else {
      auto& v = std::get<VariableState>(state_);
      const Field phi0 = v.phi_n;
      v = k == 0 ? bootstrap_variable(phi0, model_, scheme_.variable, variable_method(), steps_.taus[0], source_)
                 : step_variable(v, model_, scheme_.variable, variable_method(), steps_.taus[k], source_);
    }
    ++taken_;
    const double norm = phi().max_abs();
    if (!(norm <= kDivergenceBound)) throw Diverged("phase field exceeded the divergence bound");
  }

  /// Modified energy of the current state.
  double modified_energy() const {
    if (const auto* u = uniform_state()) return discrete_energy_uniform(*u, model_, scheme_.uniform, uniform_method());
    return discrete_energy_variable(*variable_state(), model_, scheme_.variable, steps_.ratio(taken_),
                                    variable_method());
  }

  DiagRecord observe() const {
    DiagRecord r;
    r.t = t();
    r.mass = integrate(phi());
    r.rel_mass_err = relative_mass_error(r.mass, mass0_, mass_scale_);
    r.energy_original = total_energy(phi(), model_);
    r.energy_modified = modified_energy();
    r.dt = taken_ == 0 ? 0.0 : steps_.taus[taken_ - 1];
    if (const auto* v = variable_state()) {
      r.xi = v->xi;
      r.newton_iters = v->newton_iters;
    }
    return r;
  }

 private:
  UniformMethod uniform_method() const { return scheme_.kind == Scheme::UW ? UniformMethod::UW : UniformMethod::UL; }
  VariableMethod variable_method() const {
    return scheme_.kind == Scheme::VW ? VariableMethod::VW : VariableMethod::VL;
  }

  ModelParams model_;
  SchemeConfig scheme_;
  StepSequence steps_;
  Source source_;
  std::variant<UniformState, VariableState> state_;
  std::size_t taken_ = 0;
  double mass0_ = 0.0;
  double mass_scale_ = 0.0;
};

inline DiagRecord observe(const Simulation& sim) { return sim.observe(); }

/// ||phi^{n+1} - phi^n|| / (tau ||phi^n||) < tol.
inline bool steady_state_detect(const std::vector<DiagRecord>& log, const Field& phi_new, const Field& phi_old,
                                double tol = 1e-6) {
  if (log.size() < 2) return false;
  const double tau = log.back().dt;
  const double base = l2_norm(phi_old);
  const double change = l2_norm(phi_new - phi_old);
  if (change == 0.0) return true;
  if (!(tau > 0.0) || !(base > 0.0)) return false;
  return change / (tau * base) < tol;
}

/// Number of connected regions where phi > level, with periodic wrap
/// and 4-neighbour connectivity.
inline int count_components(const Field& phi, double level = 0.0) {
  const Grid& g = phi.grid();
  const int nx = g.n(0), ny = g.n(1);
  std::vector<int> label(phi.size(), -1);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t start = 0; start < phi.size(); ++start) {
    if (label[start] >= 0 || !(phi[start] > level)) continue;
    label[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(p % nx), j = static_cast<int>(p / nx);
      const std::array<std::array<int, 2>, 4> nb{{{(i + 1) % nx, j}, {(i + nx - 1) % nx, j},
                                                  {i, (j + 1) % ny}, {i, (j + ny - 1) % ny}}};
      for (const auto& [a, b] : nb) {
        const std::size_t q = static_cast<std::size_t>(b) * nx + a;
        if (label[q] < 0 && phi[q] > level) {
          label[q] = count;
          stack.push_back(q);
        }
      }
    }
    ++count;
  }
  return count;
}

// Manufactured solution phi_e(x, t) = (t+1)^3 sin x on a 1D grid.

inline Field mms_exact(const GridPtr& grid, double t) {
  if (grid->dim() != 1) throw InvalidArgument("manufactured solution is one-dimensional");
  const double a = (t + 1) * (t + 1) * (t + 1);
  return Field::sample(grid, [a](double x) { return a * std::sin(x); });
}

/// s = d phi_e/dt - div(M grad mu(phi_e)) with mu from the discrete operators.
inline Field mms_source(const GridPtr& grid, double t, const ModelParams& model) {
  if (grid->dim() != 1) throw InvalidArgument("manufactured solution is one-dimensional");
  const double dt = 3.0 * (t + 1) * (t + 1);
  Field s = Field::sample(grid, [dt](double x) { return dt * std::sin(x); });
  s.axpy(-model.mobility, laplacian(chemical_potential(mms_exact(grid, t), model)));
  return s;
}

struct ConvergenceSetup {
  Scheme scheme = Scheme::UL;
  double theta = 1.0;
  double alpha = 0.0;
  double s1 = 0.0;
  double s2 = 4.0;
  std::vector<double> taus{1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
  double horizon = 1.0;
  int n = 128;
  ModelParams model{};
  SavParams sav{};
  /// Variable schemes: seeded random steps with tau as the largest step.
  StepKind step_kind = StepKind::Uniform;
  std::uint64_t seed = 1;
  double delta = 0.1;
  bool parallel = true;
};

struct MmsRun {
  double error = std::numeric_limits<double>::infinity();
  double max_tau = 0.0;
  double max_xi_deviation = 0.0;
  int max_newton_iters = 0;
  std::string failure;
};

/// Step sequence for a target tau: uniform, or random with max step = tau.
inline StepSequence convergence_steps(const ConvergenceSetup& c, double tau) {
  const int n_steps = static_cast<int>(std::lround(c.horizon / tau));
  if (c.step_kind == StepKind::Uniform) return make_steps(StepKind::Uniform, c.horizon, n_steps, c.theta, c.delta, 0);
  return make_steps_with_max(c.horizon, tau, c.theta, c.delta, c.seed);
}

inline MmsRun run_mms(const ConvergenceSetup& c, double tau) {
  const GridPtr grid = build_grid(1, c.n);
  ModelParams model = c.model;
  model.alpha = c.alpha;
  model.regularization = is_willmore(c.scheme) ? Regularization::Willmore : Regularization::Linear;
  SchemeConfig sc;
  sc.kind = c.scheme;
  sc.uniform.theta = c.theta;
  sc.uniform.s1 = c.s1;
  sc.uniform.s2 = c.s2;
  sc.uniform.sav = c.sav;
  sc.variable.theta = c.theta;
  sc.variable.sav = c.sav;
  MmsRun out;
  try {
    const StepSequence steps = convergence_steps(c, tau);
    out.max_tau = steps.max_tau();
    Simulation sim(mms_exact(grid, 0.0), model, sc, steps,
                   [grid, model](double t) { return mms_source(grid, t, model); });
    while (!sim.done()) {
      sim.step();
      if (const auto* v = sim.variable_state()) {
        out.max_xi_deviation = std::max(out.max_xi_deviation, std::abs(v->xi - 1.0));
        out.max_newton_iters = std::max(out.max_newton_iters, v->newton_iters);
      }
    }
    out.error = l2_norm(sim.phi() - mms_exact(grid, sim.t()));
  } catch (const NumericalError& e) {
    out.error = std::numeric_limits<double>::infinity();
    out.failure = e.what();
  }
  return out;
}

/// Errors at the final time for each tau, and log2 ratios between neighbours.
inline ConvergenceReport run_convergence(const ConvergenceSetup& c) {
  ConvergenceReport rep;
  rep.taus = c.taus;
  std::vector<std::future<MmsRun>> jobs;
  for (double tau : c.taus)
    jobs.push_back(std::async(c.parallel ? std::launch::async : std::launch::deferred,
                              [&c, tau] { return run_mms(c, tau); }));
  for (auto& j : jobs) rep.errors.push_back(j.get().error);
  for (std::size_t i = 0; i + 1 < rep.errors.size(); ++i)
    rep.orders.push_back(std::log2(rep.errors[i] / rep.errors[i + 1]) / std::log2(rep.taus[i] / rep.taus[i + 1]));
  return rep;
}

}  // namespace anich
