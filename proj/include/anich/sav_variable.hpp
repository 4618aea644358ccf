#pragma once

// Variable-step WSBDF2 schemes with the relaxed SAV (u, xi, V(xi)) for the
// linear (V_L) and Willmore (V_W) regularizations. Each step costs two
// constant-coefficient solves and a scalar Newton solve for xi.

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "anich/errors.hpp"
#include "anich/phase_model.hpp"
#include "anich/sav_uniform.hpp"
#include "anich/spectral.hpp"
#include "anich/time_operators.hpp"

namespace anich {

enum class VariableMethod { VL, VW };

/// Positive weight V with V(1) = 1 and V'(1) = -1.
struct Relaxation {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string name;

  /// V(xi) = exp(xi (1 - xi)).
  static Relaxation exp_bump() {
    return {[](double xi) { return std::exp(xi * (1.0 - xi)); },
            [](double xi) { return (1.0 - 2.0 * xi) * std::exp(xi * (1.0 - xi)); }, "exp_bump"};
  }

  void validate() const {
    if (!value || !derivative) throw InvalidArgument("relaxation function is not set");
    if (std::abs(value(1.0) - 1.0) > 1e-14) throw InvalidArgument("relaxation must satisfy V(1) = 1");
    if (std::abs(derivative(1.0) + 1.0) > 1e-8) throw InvalidArgument("relaxation must satisfy V'(1) = -1");
  }
};

struct VariableSchemeParams {
  double theta = 1.0;
  SavParams sav{};
  Relaxation relaxation = Relaxation::exp_bump();
  double newton_tol = 1e-12;
  int newton_max_iters = 50;
  /// Largest accepted step ratio; NaN selects gamma*(theta).
  double gamma_cap = std::numeric_limits<double>::quiet_NaN();

  double effective_gamma_cap() const { return std::isnan(gamma_cap) ? gamma_star(theta) : gamma_cap; }

  void validate() const {
    require_theta(theta);
    sav.validate();
    relaxation.validate();
    if (!(newton_tol > 0.0) || newton_max_iters < 1) throw InvalidArgument("invalid Newton settings");
  }
};

struct VariableState {
  Field phi_n;
  Field phi_nm1;
  double u_n = 0.0;
  /// Size of the step that produced phi_n (0 before the first step).
  double tau_n = 0.0;
  double t = 0.0;
  int step_index = 0;
  double xi = 1.0;
  int newton_iters = 0;
  /// W'(xi) at the accepted root and sqrt(E~^n) used in that step.
  double w_prime = 0.0;
  double sqrt_energy = 0.0;
};

inline SavTerm variable_force(VariableMethod method, const Field& phi, const ModelParams& model, const SavParams& sav) {
  return method == VariableMethod::VL ? sav_linear_variable(phi, model, sav) : sav_willmore_variable(phi, model, sav);
}

/// Symbol of the linear part of mu kept implicit: lambda1/eps^2 + lambda2 k^2
/// + (beta or lambda3) k^4.
inline double variable_linear_symbol(VariableMethod method, const ModelParams& model, const SavParams& sav, double k2) {
  const double top = method == VariableMethod::VL ? model.beta : sav.lambda3;
  return sav.lambda1 / (model.epsilon * model.epsilon) + sav.lambda2 * k2 + top * k2 * k2;
}

namespace detail {

struct RelaxedResidual {
  double sqrt_e, u_n, p1, p2;
  const Relaxation* v;

  // W(xi) = xi sqrt(E) - u^n - V/(2 sqrt(E)) [xi V p2 + p1]
  double value(double xi) const {
    const double vv = v->value(xi);
    return xi * sqrt_e - u_n - vv / (2.0 * sqrt_e) * (xi * vv * p2 + p1);
  }
  double derivative(double xi) const {
    const double vv = v->value(xi);
    const double dv = v->derivative(xi);
    return sqrt_e - (dv * (xi * vv * p2 + p1) + vv * (vv + xi * dv) * p2) / (2.0 * sqrt_e);
  }
};

struct NewtonOutcome {
  double xi;
  int iterations;
};

// Newton from xi = 1 inside the trust region |xi - 1| <= 0.5. If an iterate
// leaves it, the root is bracketed ([0, 2] first, then widened; W -> +-inf as
// xi -> +-inf, so a bracket always exists) and refined by Newton steps that
// fall back to bisection when they leave the bracket.
inline NewtonOutcome solve_relaxation(const RelaxedResidual& w, double tol, int max_iters) {
  double xi = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    const double dw = w.derivative(xi);
    if (!(std::abs(dw) > 0.0) || !std::isfinite(dw)) break;
    const double step = w.value(xi) / dw;
    const double next = xi - step;
    if (!std::isfinite(next) || std::abs(next - 1.0) > 0.5) break;
    xi = next;
    if (std::abs(step) <= tol * std::max(1.0, std::abs(xi))) return {xi, it + 1};
  }
  if (it == max_iters) throw NewtonDiverged("Newton iteration for xi did not converge");

  double lo = 0.0, hi = 2.0;
  double w_lo = w.value(lo), w_hi = w.value(hi);
  for (int k = 0; w_lo * w_hi > 0.0; ++k) {
    if (k > 60) throw NewtonDiverged("no sign change of the relaxation equation");
    if (w_lo > 0.0) {
      hi = lo;
      w_hi = w_lo;
      lo = lo == 0.0 ? -1.0 : 2.0 * lo;
      w_lo = w.value(lo);
    } else {
      lo = hi;
      w_lo = w_hi;
      hi *= 2.0;
      w_hi = w.value(hi);
    }
  }
  xi = 0.5 * (lo + hi);
  for (int k = 0; k < 2 * max_iters + 200; ++k) {
    ++it;
    const double wx = w.value(xi);
    if (wx == 0.0) return {xi, it};
    if ((wx < 0.0) == (w_lo < 0.0)) {
      lo = xi;
      w_lo = wx;
    } else {
      hi = xi;
    }
    const double dw = w.derivative(xi);
    double next = dw != 0.0 ? xi - wx / dw : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - xi);
    xi = next;
    if (step <= tol * std::max(1.0, std::abs(xi)) || hi - lo <= tol * std::max(1.0, std::abs(xi))) return {xi, it};
  }
  throw NewtonDiverged("safeguarded Newton for xi did not converge");
}

// a_c (phi^{n+1} - phi^n) + b_c (phi^n - phi^{n-1}); `weight` is the share of
// phi^{n+1} in phi^{n+theta}.
struct VariableStencil {
  double a_c, b_c, weight, tau, t_source;
};

inline VariableState advance_variable(const VariableState& s, const ModelParams& model,
                                      const VariableSchemeParams& scheme, VariableMethod method,
                                      const VariableStencil& st, const Field& phi_star, const Source& source) {
  const GridPtr& grid = s.phi_n.grid_ptr();
  const double mob = model.mobility;

  const SavTerm h = variable_force(method, phi_star, model, scheme.sav);
  const double sqrt_e = std::sqrt(variable_force(method, s.phi_n, model, scheme.sav).energy);

  const SpectralField phi_n_hat = to_spectral(s.phi_n);
  const SpectralField phi_nm1_hat = to_spectral(s.phi_nm1);
  const SpectralField h_hat = to_spectral(h.force);
  SpectralField source_hat;
  if (source) source_hat = to_spectral(source(st.t_source));

  SpectralField p_hat(grid);
  SpectralField q_hat(grid);
  for (std::size_t m = 0; m < p_hat.size(); ++m) {
    const double k2 = grid->wavevector(m).norm_sq();
    const double lin = mob * k2 * variable_linear_symbol(method, model, scheme.sav, k2);
    Complex g = st.a_c * phi_n_hat[m] - st.b_c * (phi_n_hat[m] - phi_nm1_hat[m]) - (1.0 - st.weight) * lin * phi_n_hat[m];
    if (source) g += source_hat[m];
    const double sigma = st.a_c + st.weight * lin;
    p_hat[m] = g / sigma;
    q_hat[m] = -mob * k2 * h_hat[m] / sigma;
  }
  const Field phi1 = from_spectral(p_hat);
  const Field phi2 = from_spectral(q_hat);

  const RelaxedResidual w{sqrt_e, s.u_n, inner(h.force, phi1 - s.phi_n), inner(h.force, phi2), &scheme.relaxation};
  const NewtonOutcome root = solve_relaxation(w, scheme.newton_tol, scheme.newton_max_iters);
  const double vxi = scheme.relaxation.value(root.xi);

  VariableState next;
  next.phi_n = phi1;
  next.phi_n.axpy(root.xi * vxi, phi2);
  next.phi_nm1 = s.phi_n;
  next.u_n = root.xi * sqrt_e;
  next.tau_n = st.tau;
  next.t = s.t + st.tau;
  next.step_index = s.step_index + 1;
  next.xi = root.xi;
  next.newton_iters = root.iterations;
  next.w_prime = w.derivative(root.xi);
  next.sqrt_energy = sqrt_e;
  require_finite(next.phi_n, "phase field");
  return next;
}

}  // namespace detail

inline VariableState initial_variable_state(const Field& phi0, const ModelParams& model,
                                            const VariableSchemeParams& scheme, VariableMethod method) {
  VariableState s;
  s.phi_n = phi0;
  s.phi_nm1 = phi0;
  s.sqrt_energy = std::sqrt(variable_force(method, phi0, model, scheme.sav).energy);
  s.u_n = s.sqrt_energy;
  return s;
}

/// First step: backward Euler on the relaxed system, u^0 = sqrt(E~(phi^0)).
inline VariableState bootstrap_variable(const Field& phi0, const ModelParams& model, const VariableSchemeParams& scheme,
                                        VariableMethod method, double tau1, const Source& source = {}) {
  model.validate();
  scheme.validate();
  if (!(tau1 > 0.0)) throw InvalidArgument("time step must be positive");
  const VariableState s0 = initial_variable_state(phi0, model, scheme, method);
  const detail::VariableStencil st{1.0 / tau1, 0.0, 1.0, tau1, tau1};
  return detail::advance_variable(s0, model, scheme, method, st, phi0, source);
}

/// One variable-step WSBDF2 step of size tau_np1.
inline VariableState step_variable(const VariableState& s, const ModelParams& model, const VariableSchemeParams& scheme,
                                   VariableMethod method, double tau_np1, const Source& source = {}) {
  if (s.step_index < 1 || !(s.tau_n > 0.0)) throw InvalidArgument("variable step needs two history levels");
  if (!(tau_np1 > 0.0)) throw InvalidArgument("time step must be positive");
  const double th = scheme.theta;
  const double gamma = tau_np1 / s.tau_n;
  const double cap = scheme.effective_gamma_cap();
  if (gamma > cap * (1.0 + 1e-12))
    throw RatioViolation("step ratio " + std::to_string(gamma) + " exceeds cap " + std::to_string(cap));
  const double denom = tau_np1 * (1.0 + gamma);
  const detail::VariableStencil st{(1.0 + 2.0 * th * gamma) / denom, (1.0 - 2.0 * th) * gamma * gamma / denom, th,
                                   tau_np1, s.t + th * tau_np1};
  Field phi_star = (1.0 + th * gamma) * s.phi_n;
  phi_star.axpy(-th * gamma, s.phi_nm1);
  return detail::advance_variable(s, model, scheme, method, st, phi_star, source);
}

inline VariableState step_VL(const VariableState& s, const ModelParams& model, const VariableSchemeParams& scheme,
                             double tau_np1, const Source& source = {}) {
  return step_variable(s, model, scheme, VariableMethod::VL, tau_np1, source);
}

inline VariableState step_VW(const VariableState& s, const ModelParams& model, const VariableSchemeParams& scheme,
                             double tau_np1, const Source& source = {}) {
  return step_variable(s, model, scheme, VariableMethod::VW, tau_np1, source);
}

/// Modified energy of the variable schemes. gamma_np2 is the ratio of the
/// step after the one that produced phi_n (0 when there is none).
inline double discrete_energy_variable(const VariableState& s, const ModelParams& model,
                                       const VariableSchemeParams& scheme, double gamma_np2, VariableMethod method) {
  const double inv_eps2 = 1.0 / (model.epsilon * model.epsilon);
  const SpectralField phi_hat = to_spectral(s.phi_n);
  const double lap_sq = weighted_spectral_sum(phi_hat, [](Wavevector k) { return k.norm_sq() * k.norm_sq(); });
  const double top = method == VariableMethod::VL ? model.beta : scheme.sav.lambda3;
  double e = 0.5 * top * lap_sq + 0.5 * scheme.sav.lambda1 * inv_eps2 * inner(s.phi_n, s.phi_n) +
             0.5 * scheme.sav.lambda2 * grad_norm_sq(phi_hat) + s.u_n * s.u_n;
  if (s.step_index > 0 && gamma_np2 > 0.0) {
    const double th = scheme.theta;
    const double coef = (2.0 * th - 1.0) * std::pow(gamma_np2, 1.5) / (2.0 * (1.0 + gamma_np2));
    if (coef != 0.0) {
      const double abs_tol = 1e-12 * (s.phi_n.max_abs() + s.phi_nm1.max_abs());
      e += coef * inv_grad_norm_sq(s.phi_n - s.phi_nm1, abs_tol) / (model.mobility * s.tau_n);
    }
  }
  return e;
}

}  // namespace anich
