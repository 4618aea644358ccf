#pragma once

// Continuous model ingredients for the anisotropic Cahn-Hilliard energy:
// double-well potential, fourfold anisotropy, and the nonlinear forces that
// the SAV schemes treat explicitly.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "anich/errors.hpp"
#include "anich/spectral.hpp"

namespace anich {

enum class Regularization { Linear, Willmore };

struct ModelParams {
  double epsilon = 0.2;
  double alpha = 0.0;
  double beta = 6e-4;
  double mobility = 1.0;
  Regularization regularization = Regularization::Linear;
  /// Floor in |grad phi| used to define the interface normal. The explicit
  /// force stiffens like 1/eta^4 just above |grad phi| = 0; at 1e-6 roundoff
  /// at a symmetric extremum is already enough to set it off.
  double eta = 1e-4;
  /// Evaluate the Willmore cross term as the pointwise product
  /// beta*(Lap phi - f/eps^2)*(Lap phi - f'/eps^2) instead of the operator form.
  bool willmore_pointwise = false;
  /// 2/3-rule truncation of the anisotropic nonlinear products.
  bool dealias = false;

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be non-negative");
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
    if (!(mobility > 0.0)) throw InvalidArgument("mobility must be positive");
    if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  }
  /// alpha >= 1/15: the unregularized problem is ill-posed.
  bool strongly_anisotropic() const { return alpha >= 1.0 / 15.0; }
};

/// SAV constant and the shift coefficients of the variable-step schemes.
struct SavParams {
  double c0 = 100.0;
  double lambda1 = 0.0;
  double lambda2 = 4.0;
  double lambda3 = 0.0;

  void validate() const {
    if (!(c0 > 0.0)) throw InvalidArgument("SAV constant must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) throw InvalidArgument("shift coefficients must be non-negative");
  }
};

struct DoubleWell {
  Field F;       // (phi^2 - 1)^2 / 4
  Field f;       // F'  = phi^3 - phi
  Field fprime;  // F'' = 3 phi^2 - 1
};

inline DoubleWell double_well(const Field& phi) {
  DoubleWell out{Field(phi.grid_ptr()), Field(phi.grid_ptr()), Field(phi.grid_ptr())};
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double p = phi[i];
    const double q = p * p - 1.0;
    out.F[i] = 0.25 * q * q;
    out.f[i] = p * q;
    out.fprime[i] = 3.0 * p * p - 1.0;
  }
  return out;
}

struct Anisotropy {
  Field gamma;
  std::vector<Field> m;
};

/// gamma(n) = 1 + alpha (4 sum n_d^4 - 3) and the vector field
/// m = gamma grad phi + P grad_n gamma / g * (|grad phi|^2 / 2 + F / eps^2),
/// with g = sqrt(|grad phi|^2 + eta^2), n = grad phi / g, P = I - n n^T.
inline Anisotropy anisotropy(std::span<const Field> grad_phi, const Field& F, const ModelParams& params) {
  const int dim = static_cast<int>(grad_phi.size());
  if (dim < 1 || dim > 2) throw InvalidArgument("gradient must have 1 or 2 components");
  const GridPtr& grid = grad_phi[0].grid_ptr();
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);
  const double eta2 = params.eta * params.eta;
  const double a = params.alpha;

  Anisotropy out{Field(grid), std::vector<Field>(dim, Field(grid))};
  for (std::size_t p = 0; p < grid->size(); ++p) {
    double grad[2] = {grad_phi[0][p], dim == 2 ? grad_phi[1][p] : 0.0};
    const double grad2 = grad[0] * grad[0] + grad[1] * grad[1];
    const double g = std::sqrt(grad2 + eta2);
    const double n[2] = {grad[0] / g, grad[1] / g};
    const double n4 = n[0] * n[0] * n[0] * n[0] + n[1] * n[1] * n[1] * n[1];
    const double gamma = 1.0 + a * (4.0 * n4 - 3.0);
    // grad_n gamma = 16 alpha n^3; n . grad_n gamma = 16 alpha sum n^4.
    const double n_dot = 16.0 * a * n4;
    const double w = 0.5 * grad2 + F[p] * inv_eps2;
    out.gamma[p] = gamma;
    for (int d = 0; d < dim; ++d) {
      const double proj = 16.0 * a * n[d] * n[d] * n[d] - n[d] * n_dot;
      out.m[d][p] = gamma * grad[d] + proj / g * w;
    }
  }
  return out;
}

inline Anisotropy anisotropy(const Field& phi, const ModelParams& params) {
  const auto grad = gradient(phi);
  return anisotropy(grad, double_well(phi).F, params);
}

namespace detail {

// Pieces shared by every SAV force.
struct AnisotropicPart {
  SpectralField phi_hat;
  DoubleWell well;
  Field force;    // gamma f / eps^2 - div m
  double energy;  // int gamma (|grad phi|^2/2 + F/eps^2)
};

inline AnisotropicPart anisotropic_part(const Field& phi, const ModelParams& params) {
  AnisotropicPart out{to_spectral(phi), double_well(phi), Field(), 0.0};
  const auto grad = gradient(out.phi_hat);
  auto an = anisotropy(grad, out.well.F, params);
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);

  Field density(phi.grid_ptr());
  Field bulk(phi.grid_ptr());
  for (std::size_t p = 0; p < phi.size(); ++p) {
    double grad2 = 0.0;
    for (const auto& gd : grad) grad2 += gd[p] * gd[p];
    density[p] = an.gamma[p] * (0.5 * grad2 + out.well.F[p] * inv_eps2);
    bulk[p] = an.gamma[p] * out.well.f[p] * inv_eps2;
  }
  out.energy = integrate(density);

  SpectralField div_m = divergence_spectral(an.m);
  if (params.dealias) {
    div_m = dealias(std::move(div_m));
    bulk = dealias(bulk);
  }
  out.force = bulk - from_spectral(div_m);
  return out;
}

// beta (Lap - f'/eps^2)(Lap phi - f/eps^2) and (beta/2) ||Lap phi - f/eps^2||^2.
struct WillmorePart {
  Field force;
  double energy;
  Field lap_phi;
};

inline WillmorePart willmore_part(const AnisotropicPart& base, const ModelParams& params) {
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);
  Field lap = from_spectral(laplacian(base.phi_hat));
  Field omega = lap;
  omega.axpy(-inv_eps2, base.well.f);
  Field force(omega.grid_ptr());
  if (params.willmore_pointwise) {
    for (std::size_t p = 0; p < force.size(); ++p)
      force[p] = params.beta * omega[p] * (lap[p] - base.well.fprime[p] * inv_eps2);
  } else {
    Field lap_omega = laplacian(omega);
    for (std::size_t p = 0; p < force.size(); ++p)
      force[p] = params.beta * (lap_omega[p] - base.well.fprime[p] * inv_eps2 * omega[p]);
  }
  return {std::move(force), 0.5 * params.beta * inner(omega, omega), std::move(lap)};
}

inline double checked_radicand(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw NonPositiveRadicand(std::string(name) + " radicand is not positive (" + std::to_string(value) +
                              "); increase the SAV constant");
  return value;
}

}  // namespace detail

/// A nonlinear force together with the energy it derives from.
struct SavTerm {
  Field force;
  double energy;
};

/// H = (gamma f/eps^2 - div m) / sqrt(E1), E1 = int gamma(...) + C.
inline SavTerm sav_linear_uniform(const Field& phi, const ModelParams& params, const SavParams& sav) {
  auto base = detail::anisotropic_part(phi, params);
  const double e1 = detail::checked_radicand(base.energy + sav.c0, "E1");
  base.force *= 1.0 / std::sqrt(e1);
  return {std::move(base.force), e1};
}

/// Z = (gamma f/eps^2 - div m + beta (Lap - f'/eps^2)(Lap phi - f/eps^2)) / sqrt(E2).
inline SavTerm sav_willmore_uniform(const Field& phi, const ModelParams& params, const SavParams& sav) {
  auto base = detail::anisotropic_part(phi, params);
  auto will = detail::willmore_part(base, params);
  const double e2 = detail::checked_radicand(base.energy + will.energy + sav.c0, "E2");
  Field z = base.force + will.force;
  z *= 1.0 / std::sqrt(e2);
  return {std::move(z), e2};
}

/// Shifted force for the relaxed SAV (not normalized by sqrt(E~1)).
inline SavTerm sav_linear_variable(const Field& phi, const ModelParams& params, const SavParams& sav) {
  auto base = detail::anisotropic_part(phi, params);
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);
  const double e1 = base.energy - 0.5 * sav.lambda1 * inv_eps2 * inner(phi, phi) -
                    0.5 * sav.lambda2 * grad_norm_sq(base.phi_hat) + sav.c0;
  detail::checked_radicand(e1, "E~1");
  Field h = std::move(base.force);
  h.axpy(-sav.lambda1 * inv_eps2, phi);
  h.axpy(sav.lambda2, from_spectral(laplacian(base.phi_hat)));
  return {std::move(h), e1};
}

inline SavTerm sav_willmore_variable(const Field& phi, const ModelParams& params, const SavParams& sav) {
  auto base = detail::anisotropic_part(phi, params);
  auto will = detail::willmore_part(base, params);
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);
  const double e2 = base.energy + will.energy - 0.5 * sav.lambda1 * inv_eps2 * inner(phi, phi) -
                    0.5 * sav.lambda2 * grad_norm_sq(base.phi_hat) -
                    0.5 * sav.lambda3 * inner(will.lap_phi, will.lap_phi) + sav.c0;
  detail::checked_radicand(e2, "E~2");
  Field z = base.force + will.force;
  z.axpy(-sav.lambda1 * inv_eps2, phi);
  z.axpy(sav.lambda2, will.lap_phi);
  z.axpy(-sav.lambda3, laplacian(will.lap_phi));
  return {std::move(z), e2};
}

/// Variational derivative of total_energy.
inline Field chemical_potential(const Field& phi, const ModelParams& params) {
  auto base = detail::anisotropic_part(phi, params);
  if (params.regularization == Regularization::Willmore) return base.force + detail::willmore_part(base, params).force;
  Field mu = std::move(base.force);
  mu.axpy(params.beta, from_spectral(laplacian(laplacian(base.phi_hat))));
  return mu;
}

/// Original free energy int [gamma(n)(|grad phi|^2/2 + F/eps^2) + beta/2 G(phi)].
inline double total_energy(const Field& phi, const ModelParams& params) {
  auto base = detail::anisotropic_part(phi, params);
  if (params.regularization == Regularization::Willmore) {
    return base.energy + detail::willmore_part(base, params).energy;
  }
  Field lap = from_spectral(laplacian(base.phi_hat));
  return base.energy + 0.5 * params.beta * inner(lap, lap);
}

}  // namespace anich
