#pragma once

// Weighted-and-shifted BDF2 difference operators, the G-stability matrix and
// the step-ratio theory for variable steps.

#include <cmath>
#include <limits>
#include <utility>

#include "anich/errors.hpp"
#include "anich/spectral.hpp"

namespace anich {

inline void require_theta(double theta) {
  if (!(theta >= 0.5 && theta <= 1.0)) throw InvalidArgument("theta must lie in [1/2, 1]");
}

namespace detail {

// Value-generic helpers so the operators work on reals and Fields alike.
inline double scaled_sum(double a, double u, double b, double v, double c, double w) { return a * u + b * v + c * w; }
inline Field scaled_sum(double a, const Field& u, double b, const Field& v, double c, const Field& w) {
  Field out = a * u;
  out.axpy(b, v);
  out.axpy(c, w);
  return out;
}
inline double dot(double a, double b) { return a * b; }
inline double dot(const Field& a, const Field& b) { return inner(a, b); }

}  // namespace detail

/// ((theta+1/2) u^{n+1} - 2 theta u^n + (theta-1/2) u^{n-1}) / tau, an
/// approximation of u'(t^{n+theta}).
template <class T>
T wsbdf2_apply(double theta, double tau, const T& u_np1, const T& u_n, const T& u_nm1) {
  return detail::scaled_sum((theta + 0.5) / tau, u_np1, -2.0 * theta / tau, u_n, (theta - 0.5) / tau, u_nm1);
}

/// Symmetric 2x2 G-matrix for theta, plus the remainder coefficients that
/// close the telescoping identity
///   tau (D u, theta u^{n+1} + (1-theta) u^n)
///     = (|[u^{n+1},u^n]|_G^2 - |[u^n,u^{n-1}]|_G^2) / 2
///       + |alpha2 u^{n+1} + alpha1 u^n + alpha0 u^{n-1}|^2 / 4.
/// g22 weighs the newest level.
struct GMatrix {
  double g11, g12, g22;
  double alpha0, alpha1, alpha2;
};

inline GMatrix make_g_matrix(double theta) {
  require_theta(theta);
  const double s = std::sqrt(theta * (2.0 * theta - 1.0));
  return {theta * (2.0 * theta - 1.0) / 2.0,
          -(theta + 1.0) * (2.0 * theta - 1.0) / 2.0,
          theta * (2.0 * theta + 3.0) / 2.0,
          s,
          -2.0 * s,
          s};
}

/// |[newer, older]|_G^2 with the L2 inner product (Fields) or plain product.
template <class T>
double g_norm_sq(const GMatrix& g, const T& newer, const T& older) {
  using detail::dot;
  return g.g22 * dot(newer, newer) + 2.0 * g.g12 * dot(newer, older) + g.g11 * dot(older, older);
}

/// Both sides of the telescoping identity above (tau = 1 is implied on the
/// left since the identity is scale free in tau).
template <class T>
std::pair<double, double> lemma31_remainder(double theta, const T& u_np1, const T& u_n, const T& u_nm1) {
  const GMatrix g = make_g_matrix(theta);
  using detail::dot;
  const T d = wsbdf2_apply(theta, 1.0, u_np1, u_n, u_nm1);
  const T avg = detail::scaled_sum(theta, u_np1, 1.0 - theta, u_n, 0.0, u_nm1);
  const double lhs = dot(d, avg);
  const T rem = detail::scaled_sum(g.alpha2, u_np1, g.alpha1, u_n, g.alpha0, u_nm1);
  const double rhs = 0.5 * (g_norm_sq(g, u_np1, u_n) - g_norm_sq(g, u_n, u_nm1)) + 0.25 * dot(rem, rem);
  return {lhs, rhs};
}

/// Variable-step operator with ratio gamma = tau_{n+1} / tau_n:
///   (1 + 2 theta gamma) / (tau (1+gamma)) (u^{n+1}-u^n)
///   + (1-2theta) gamma^2 / (tau (1+gamma)) (u^n - u^{n-1}).
template <class T>
T vbdf2_apply(double theta, double tau_np1, double gamma_np1, const T& u_np1, const T& u_n, const T& u_nm1) {
  const double denom = tau_np1 * (1.0 + gamma_np1);
  const double a = (1.0 + 2.0 * theta * gamma_np1) / denom;
  const double b = (1.0 - 2.0 * theta) * gamma_np1 * gamma_np1 / denom;
  return detail::scaled_sum(a, u_np1, b - a, u_n, -b, u_nm1);
}

/// (1-2theta)^2 g^3 - 4 theta^2 g^2 - 4 theta g - 1
inline double ratio_cubic(double theta, double g) {
  const double c = (1.0 - 2.0 * theta) * (1.0 - 2.0 * theta);
  return ((c * g - 4.0 * theta * theta) * g - 4.0 * theta) * g - 1.0;
}

/// Largest admissible adjacent step ratio: the positive root of ratio_cubic,
/// or +inf at theta = 1/2 where the cubic has no positive root.
inline double gamma_star(double theta) {
  require_theta(theta);
  if (theta == 0.5) return std::numeric_limits<double>::infinity();
  // The cubic is negative on [0, 1] and eventually positive.
  double lo = 1.0;
  double hi = 2.0;
  while (ratio_cubic(theta, hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio_cubic(theta, mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// R(x, y) of the variable-step energy inequality.
inline double ratio_remainder(double theta, double x, double y) {
  return (2.0 * (1.0 + 2.0 * theta * x) + (1.0 - 2.0 * theta) * std::pow(x, 1.5)) / (1.0 + x) -
         (2.0 * theta - 1.0) * std::pow(y, 1.5) / (1.0 + y);
}

/// R_theta^n = (2theta-1) gamma_{n+1}^{3/2} / (2(1+gamma_{n+1})) * |phi^n - phi^{n-1}|^2 / tau_n,
/// given the squared increment norm.
inline double ratio_carry(double theta, double gamma_np1, double increment_sq, double tau_n) {
  return (2.0 * theta - 1.0) * std::pow(gamma_np1, 1.5) / (2.0 * (1.0 + gamma_np1)) * increment_sq / tau_n;
}

/// Both sides of
///   D~phi . (phi^{n+1} - phi^n) >= R^{n+1} - R^n + R(g1, g2) |phi^{n+1}-phi^n|^2 / (2 tau_{n+1})
/// with g1 = tau_{n+1}/tau_n and g2 = tau_{n+2}/tau_{n+1}.
template <class T>
std::pair<double, double> lemma41_terms(double theta, double gamma_np1, double gamma_np2, double tau_n,
                                        const T& phi_np1, const T& phi_n, const T& phi_nm1) {
  using detail::dot;
  const double tau_np1 = gamma_np1 * tau_n;
  const T d = vbdf2_apply(theta, tau_np1, gamma_np1, phi_np1, phi_n, phi_nm1);
  const T inc = detail::scaled_sum(1.0, phi_np1, -1.0, phi_n, 0.0, phi_nm1);
  const T prev = detail::scaled_sum(1.0, phi_n, -1.0, phi_nm1, 0.0, phi_nm1);
  const double inc2 = dot(inc, inc);
  const double lhs = dot(d, inc);
  const double rhs = ratio_carry(theta, gamma_np2, inc2, tau_np1) - ratio_carry(theta, gamma_np1, dot(prev, prev), tau_n) +
                     ratio_remainder(theta, gamma_np1, gamma_np2) * inc2 / (2.0 * tau_np1);
  return {lhs, rhs};
}

}  // namespace anich
