#pragma once

// Uniform-step WSBDF2 + SAV schemes for the linear (U_L) and Willmore (U_W)
// regularizations. Each step reduces to two constant-coefficient solves and a
// scalar rank-one correction.

#include <cmath>
#include <functional>
#include <string>

#include "anich/errors.hpp"
#include "anich/phase_model.hpp"
#include "anich/spectral.hpp"
#include "anich/time_operators.hpp"

namespace anich {

enum class UniformMethod { UL, UW };

struct UniformSchemeParams {
  double theta = 1.0;
  double tau = 1e-3;
  double s1 = 4.0;
  double s2 = 4.0;
  double s3 = 0.0;  // U_W only
  SavParams sav{};

  void validate() const {
    require_theta(theta);
    if (!(tau > 0.0)) throw InvalidArgument("time step must be positive");
    if (s1 < 0.0 || s2 < 0.0 || s3 < 0.0) throw InvalidArgument("stabilizers must be non-negative");
    sav.validate();
  }
};

/// Two-level history. After a step, phi_n / r_n hold the newest level.
struct UniformState {
  Field phi_n;
  Field phi_nm1;
  double r_n = 0.0;
  double r_nm1 = 0.0;
  double t = 0.0;
  int step_index = 0;
  /// Denominator of the rank-one correction in the last step (>= 1 for constant mobility).
  double denominator = 1.0;
};

/// Forcing added to the phase equation, evaluated at the time where the
/// difference quotient is consistent.
using Source = std::function<Field(double)>;

/// Explicit nonlinear force of a uniform method and its energy (E1 or E2).
inline SavTerm uniform_force(UniformMethod method, const Field& phi, const ModelParams& model, const SavParams& sav) {
  return method == UniformMethod::UL ? sav_linear_uniform(phi, model, sav) : sav_willmore_uniform(phi, model, sav);
}

namespace detail {

// a phi^{n+1} - b phi^n + c phi^{n-1} over tau; `weight` is the share of the
// new level in the theta-averaged quantities.
struct UniformStencil {
  double a, b, c, weight, t_source;
};

inline void require_finite(const Field& u, const char* what) {
  if (!u.all_finite()) throw Diverged(std::string(what) + " became non-finite");
}

inline UniformState advance_uniform(const UniformState& s, const ModelParams& model, const UniformSchemeParams& scheme,
                                    UniformMethod method, const UniformStencil& st, const Field& phi_star,
                                    const Field& phi_bar, const Source& source) {
  const GridPtr& grid = s.phi_n.grid_ptr();
  const double tau = scheme.tau;
  const double mob = model.mobility;
  const double inv_eps2 = 1.0 / (model.epsilon * model.epsilon);
  const bool willmore = method == UniformMethod::UW;

  const SavTerm h = uniform_force(method, phi_star, model, scheme.sav);

  // Implicit part of mu acting on phi^{n+1}, and the stabilizer symbol acting
  // on phi^{n+1} - phi_bar.
  const double beta_impl = willmore ? 0.0 : model.beta * st.weight;
  const double s3 = willmore ? scheme.s3 : 0.0;
  auto stab = [&](double k2) { return scheme.s1 * inv_eps2 + scheme.s2 * k2 + s3 * k2 * k2; };
  auto sigma = [&](double k2) { return st.a / tau + mob * k2 * (stab(k2) + beta_impl * k2 * k2); };

  const double hphi_old = inner(h.force, st.b * s.phi_n - st.c * s.phi_nm1);
  const double g_tilde = (st.b * s.r_n - st.c * s.r_nm1) / st.a - 0.5 * hphi_old / st.a;
  const double r_explicit = st.weight * g_tilde + (1.0 - st.weight) * s.r_n;
  const double beta_hist = willmore ? 0.0 : model.beta * (1.0 - st.weight);

  const SpectralField phi_n_hat = to_spectral(s.phi_n);
  const SpectralField phi_nm1_hat = to_spectral(s.phi_nm1);
  const SpectralField phi_bar_hat = to_spectral(phi_bar);
  const SpectralField h_hat = to_spectral(h.force);
  SpectralField source_hat;
  if (source) source_hat = to_spectral(source(st.t_source));

  SpectralField p_hat(grid);
  SpectralField q_hat(grid);
  for (std::size_t m = 0; m < p_hat.size(); ++m) {
    const double k2 = grid->wavevector(m).norm_sq();
    const Complex explicit_mu = beta_hist * k2 * k2 * phi_n_hat[m] - stab(k2) * phi_bar_hat[m];
    Complex g = (st.b * phi_n_hat[m] - st.c * phi_nm1_hat[m]) / tau - mob * k2 * explicit_mu -
                mob * k2 * r_explicit * h_hat[m];
    if (source) g += source_hat[m];
    const double sg = sigma(k2);
    p_hat[m] = g / sg;
    q_hat[m] = -mob * k2 * h_hat[m] / sg;
  }
  const Field p = from_spectral(p_hat);
  const Field q = from_spectral(q_hat);

  const double denominator = 1.0 - 0.5 * st.weight * inner(h.force, q);
  if (!(denominator >= 0.5)) throw DenominatorDegenerate("rank-one correction denominator " + std::to_string(denominator));
  const double x = inner(h.force, p) / denominator;

  UniformState next;
  next.phi_n = p;
  next.phi_n.axpy(0.5 * st.weight * x, q);
  next.phi_nm1 = s.phi_n;
  next.r_n = 0.5 * x + g_tilde;
  next.r_nm1 = s.r_n;
  next.t = s.t + tau;
  next.step_index = s.step_index + 1;
  next.denominator = denominator;
  require_finite(next.phi_n, "phase field");
  if (!std::isfinite(next.r_n)) throw Diverged("SAV scalar became non-finite");
  return next;
}

}  // namespace detail

/// State at t = 0 with both history slots holding phi0 and r0 = sqrt(E(phi0)).
inline UniformState initial_uniform_state(const Field& phi0, const ModelParams& model,
                                          const UniformSchemeParams& scheme, UniformMethod method) {
  const double r0 = std::sqrt(uniform_force(method, phi0, model, scheme.sav).energy);
  return {phi0, phi0, r0, r0, 0.0, 0, 1.0};
}

/// First step by backward Euler on the SAV system.
inline UniformState bootstrap_bdf1(const Field& phi0, const ModelParams& model, const UniformSchemeParams& scheme,
                                   UniformMethod method, const Source& source = {}) {
  model.validate();
  scheme.validate();
  const UniformState s0 = initial_uniform_state(phi0, model, scheme, method);
  const detail::UniformStencil st{1.0, 1.0, 0.0, 1.0, scheme.tau};
  return detail::advance_uniform(s0, model, scheme, method, st, phi0, phi0, source);
}

/// One WSBDF2 step of either uniform method. Requires two history levels.
inline UniformState step_uniform(const UniformState& s, const ModelParams& model, const UniformSchemeParams& scheme,
                                 UniformMethod method, const Source& source = {}) {
  const double th = scheme.theta;
  const detail::UniformStencil st{th + 0.5, 2.0 * th, th - 0.5, th, s.t + th * scheme.tau};
  Field phi_star = (1.0 + th) * s.phi_n;
  phi_star.axpy(-th, s.phi_nm1);
  Field phi_bar = 2.0 * s.phi_n;
  phi_bar -= s.phi_nm1;
  return detail::advance_uniform(s, model, scheme, method, st, phi_star, phi_bar, source);
}

inline UniformState step_UL(const UniformState& s, const ModelParams& model, const UniformSchemeParams& scheme,
                            const Source& source = {}) {
  return step_uniform(s, model, scheme, UniformMethod::UL, source);
}

inline UniformState step_UW(const UniformState& s, const ModelParams& model, const UniformSchemeParams& scheme,
                            const Source& source = {}) {
  return step_uniform(s, model, scheme, UniformMethod::UW, source);
}

/// Modified energy that the uniform schemes dissipate, built from the two
/// levels held in the state.
inline double discrete_energy_uniform(const UniformState& s, const ModelParams& model,
                                      const UniformSchemeParams& scheme, UniformMethod method) {
  const GMatrix g = make_g_matrix(scheme.theta);
  const double inv_eps2 = 1.0 / (model.epsilon * model.epsilon);
  const Field inc = s.phi_n - s.phi_nm1;
  const SpectralField inc_hat = to_spectral(inc);
  double e = g_norm_sq(g, s.r_n, s.r_nm1) + 0.5 * scheme.s1 * inv_eps2 * inner(inc, inc) +
             0.5 * scheme.s2 * grad_norm_sq(inc_hat);
  if (method == UniformMethod::UL) {
    e += 0.5 * model.beta * g_norm_sq(g, laplacian(s.phi_n), laplacian(s.phi_nm1));
  } else {
    e += 0.5 * scheme.s3 * weighted_spectral_sum(inc_hat, [](Wavevector k) { return k.norm_sq() * k.norm_sq(); });
  }
  return e;
}

}  // namespace anich
