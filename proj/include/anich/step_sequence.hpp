#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "anich/errors.hpp"
#include "anich/time_operators.hpp"

namespace anich {

/// Step sizes for a run; taus[k] is the size of step k+1 (t_{k+1} - t_k).
struct StepSequence {
  std::vector<double> taus;
  double gamma_cap = std::numeric_limits<double>::infinity();

  std::size_t size() const { return taus.size(); }
  /// gamma_{k+1} = taus[k] / taus[k-1] for k >= 1; the first step has no ratio (0 is returned).
  double ratio(std::size_t k) const { return k == 0 || k >= taus.size() ? 0.0 : taus[k] / taus[k - 1]; }
  double horizon() const { return std::accumulate(taus.begin(), taus.end(), 0.0); }
  double max_tau() const { return taus.empty() ? 0.0 : *std::max_element(taus.begin(), taus.end()); }
  double max_ratio() const {
    double r = 0.0;
    for (std::size_t k = 1; k < taus.size(); ++k) r = std::max(r, ratio(k));
    return r;
  }
};

enum class StepKind { Uniform, RandomAdmissible };

/// Uniform steps, or seeded random steps whose adjacent ratios all lie in
/// [1/rho, rho] with rho = min(gamma*(theta) - delta, gamma_cap). Random
/// sequences are normalized to sum to T and depend only on the seed.
inline StepSequence make_steps(StepKind kind, double horizon, int n_steps, double theta, double delta,
                               std::uint64_t seed, double gamma_cap = 10.0) {
  if (n_steps < 2) throw InvalidArgument("need at least two steps");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  StepSequence seq;
  if (kind == StepKind::Uniform) {
    seq.taus.assign(static_cast<std::size_t>(n_steps), horizon / n_steps);
    seq.gamma_cap = std::max(1.0, std::min(gamma_cap, gamma_star(theta)));
    return seq;
  }
  const double gs = gamma_star(theta);
  if (!(delta > 0.0) || !(delta < gs)) throw InvalidArgument("delta must lie in (0, gamma*(theta))");
  const double rho = std::min(gs - delta, gamma_cap);
  if (!(rho >= 1.0) || !std::isfinite(rho)) throw InvalidArgument("no admissible ratio cap >= 1 for these constraints");

  std::mt19937_64 rng(seed);
  const double log_rho = std::log(rho);
  seq.taus.resize(static_cast<std::size_t>(n_steps));
  for (double& w : seq.taus) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    w = std::exp(u * log_rho);
  }
  const double total = std::accumulate(seq.taus.begin(), seq.taus.end(), 0.0);
  for (double& w : seq.taus) w *= horizon / total;
  seq.gamma_cap = rho;
  return seq;
}

/// Random admissible steps over [0, T] whose largest step does not exceed
/// tau_max, using the fewest steps (searched upward from T / tau_max).
inline StepSequence make_steps_with_max(double horizon, double tau_max, double theta, double delta, std::uint64_t seed,
                                        double gamma_cap = 10.0) {
  if (!(tau_max > 0.0) || !(tau_max <= horizon)) throw InvalidArgument("tau_max must lie in (0, T]");
  const int start = std::max(2, static_cast<int>(std::ceil(horizon / tau_max - 1e-9)));
  for (int n = start;; n += std::max(1, n / 100)) {
    StepSequence s = make_steps(StepKind::RandomAdmissible, horizon, n, theta, delta, seed, gamma_cap);
    if (s.max_tau() <= tau_max) return s;
  }
}

}  // namespace anich
