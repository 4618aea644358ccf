#pragma once

// Shared test helpers: hand-rolled random generators and dense reference
// operators built from an explicit DFT matrix (independent of FFTW).

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "anich/spectral.hpp"

namespace testing_support {

using anich::Field;
using anich::GridPtr;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double theta() { return uniform(0.5, 1.0); }

  /// Pointwise i.i.d. values in [lo, hi).
  Field noise(const GridPtr& g, double lo = -1.0, double hi = 1.0) {
    Field u(g);
    for (std::size_t p = 0; p < u.size(); ++p) u[p] = uniform(lo, hi);
    return u;
  }

  /// Smooth random trigonometric polynomial with |modes| <= kmax per axis.
  Field smooth(const GridPtr& g, int kmax = 4, double amp = 1.0) {
    Field u(g);
    const int ky_max = g->dim() == 2 ? kmax : 0;
    for (int kx = 0; kx <= kmax; ++kx) {
      for (int ky = -ky_max; ky <= ky_max; ++ky) {
        const double a = uniform(-amp, amp) / (1.0 + kx * kx + ky * ky);
        const double ph = uniform(0.0, anich::kTwoPi);
        for (std::size_t p = 0; p < u.size(); ++p) u[p] += a * std::cos(kx * g->x(p) + ky * g->y(p) + ph);
      }
    }
    return u;
  }

 private:
  std::mt19937_64 rng_;
};

/// Real N x N matrix of the operator with Fourier symbol s(k) on a 1D grid,
/// assembled as F^{-1} diag(s) F from an explicit DFT matrix.
template <class Symbol>
Eigen::MatrixXd dense_symbol_matrix(const anich::Grid& g, Symbol&& s) {
  const int n = g.n(0);
  using C = std::complex<double>;
  Eigen::MatrixXcd f(n, n), finv(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const double ang = anich::kTwoPi * k * j / n;
      f(k, j) = std::polar(1.0 / n, -ang);
      finv(j, k) = std::polar(1.0, ang);
    }
  Eigen::VectorXcd d(n);
  for (int k = 0; k < n; ++k) {
    const int m = k <= n / 2 ? k : k - n;
    const double kk = m * anich::kTwoPi / g.length(0);
    d(k) = C(s(kk));
  }
  return (finv * d.asDiagonal() * f).real();
}

inline Eigen::VectorXd to_vec(const Field& u) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v(static_cast<Eigen::Index>(i)) = u[i];
  return v;
}

inline Field to_field(const GridPtr& g, const Eigen::VectorXd& v) {
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = v(static_cast<Eigen::Index>(i));
  return u;
}

inline double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing_support
