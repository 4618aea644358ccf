#pragma once

// Periodic Fourier collocation on uniform 1D/2D grids.
//
// Storage order: values are row-major with x fastest. In 2D the flat index of
// grid point (x_i, y_j) is j * nx + i. Spectral coefficients use the same
// layout, with FFT mode ordering {0, 1, ..., n/2, -n/2+1, ..., -1} per axis.
// Coefficients are normalized (forward FFT divided by the point count), so a
// field u satisfies u(x) = sum_k c_k exp(i k.x).

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <type_traits>
#include <vector>

#include "anich/errors.hpp"

namespace anich {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

using Complex = std::complex<double>;

struct Wavevector {
  double kx = 0.0;
  double ky = 0.0;
  double norm_sq() const { return kx * kx + ky * ky; }
};

namespace detail {

// FFTW's planner is not thread safe; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  FftPlans(int dim, int nx, int ny) {
    std::lock_guard lock(planner_mutex());
    const std::size_t total = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    fftw_complex* in = fftw_alloc_complex(total);
    fftw_complex* out = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (dim == 1) {
      forward = fftw_plan_dft_1d(nx, in, out, FFTW_FORWARD, flags);
      backward = fftw_plan_dft_1d(nx, in, out, FFTW_BACKWARD, flags);
    } else {
      forward = fftw_plan_dft_2d(ny, nx, in, out, FFTW_FORWARD, flags);
      backward = fftw_plan_dft_2d(ny, nx, in, out, FFTW_BACKWARD, flags);
    }
    fftw_free(in);
    fftw_free(out);
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Uniform periodic tensor grid with cached FFT plans. Immutable once built;
/// share it through GridPtr.
class Grid {
 public:
  Grid(int dim, int n, double length)
      : dim_(dim),
        n_{n, dim == 2 ? n : 1},
        length_{length, dim == 2 ? length : 0.0},
        plans_(std::make_unique<detail::FftPlans>(dim, n_[0], n_[1])) {
    for (int d = 0; d < dim_; ++d) {
      const double scale = kTwoPi / length_[d];
      auto& k = wavenumbers_[d];
      auto& k_odd = odd_wavenumbers_[d];
      k.resize(static_cast<std::size_t>(n_[d]));
      k_odd.resize(k.size());
      for (int m = 0; m < n_[d]; ++m) {
        const int mode = m <= n_[d] / 2 ? m : m - n_[d];
        k[m] = mode * scale;
        k_odd[m] = (m == n_[d] / 2) ? 0.0 : k[m];
      }
    }
    if (dim_ == 1) {
      wavenumbers_[1] = {0.0};
      odd_wavenumbers_[1] = {0.0};
    }
  }

  int dim() const { return dim_; }
  int n(int d) const { return n_[d]; }
  double length(int d) const { return length_[d]; }
  double spacing(int d) const { return length_[d] / n_[d]; }
  std::size_t size() const { return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]); }
  /// |Omega|: domain length in 1D, area in 2D.
  double volume() const { return dim_ == 1 ? length_[0] : length_[0] * length_[1]; }

  /// Angular wavenumbers along axis d in FFT order (Nyquist kept, positive).
  std::span<const double> wavenumbers(int d) const { return wavenumbers_[d]; }
  /// Same, with the Nyquist entry zeroed; used for odd-order derivatives.
  std::span<const double> odd_wavenumbers(int d) const { return odd_wavenumbers_[d]; }

  Wavevector wavevector(std::size_t flat) const {
    const std::size_t i = flat % static_cast<std::size_t>(n_[0]);
    const std::size_t j = flat / static_cast<std::size_t>(n_[0]);
    return {wavenumbers_[0][i], wavenumbers_[1][j]};
  }
  /// Integer mode indices of a flat index.
  std::array<int, 2> mode(std::size_t flat) const {
    const int i = static_cast<int>(flat % static_cast<std::size_t>(n_[0]));
    const int j = static_cast<int>(flat / static_cast<std::size_t>(n_[0]));
    return {i <= n_[0] / 2 ? i : i - n_[0], j <= n_[1] / 2 ? j : j - n_[1]};
  }
  double x(std::size_t flat) const { return spacing(0) * static_cast<double>(flat % n_[0]); }
  double y(std::size_t flat) const {
    return dim_ == 2 ? spacing(1) * static_cast<double>(flat / n_[0]) : 0.0;
  }

  bool same_shape(const Grid& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && length_ == other.length_;
  }

  void forward(const Complex* in, Complex* out) const {
    fftw_execute_dft(plans_->forward, detail::as_fftw(const_cast<Complex*>(in)), detail::as_fftw(out));
  }
  void backward(const Complex* in, Complex* out) const {
    fftw_execute_dft(plans_->backward, detail::as_fftw(const_cast<Complex*>(in)), detail::as_fftw(out));
  }

 private:
  int dim_;
  std::array<int, 2> n_;
  std::array<double, 2> length_;
  std::array<std::vector<double>, 2> wavenumbers_;
  std::array<std::vector<double>, 2> odd_wavenumbers_;
  std::unique_ptr<detail::FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a periodic grid with n points per axis on [0, length)^dim.
inline GridPtr build_grid(int dim, int n, double length = kTwoPi) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (n < 8 || n % 2 != 0) throw InvalidArgument("grid size must be even and at least 8");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("domain length must be positive");
  return std::make_shared<const Grid>(dim, n, length);
}

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (&a != &b && !a.same_shape(b)) throw InvalidArgument("fields live on different grids");
}

/// Real grid function.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid, double value = 0.0) : grid_(std::move(grid)), values_(grid_->size(), value) {}
  Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw InvalidArgument("value count does not match grid size");
  }

  /// Samples f at the grid points. f takes (x) in 1D or (x, y) in 2D.
  template <class F>
  static Field sample(const GridPtr& grid, F&& f) {
    Field out(grid);
    for (std::size_t p = 0; p < out.size(); ++p) {
      if constexpr (std::is_invocable_v<F, double, double>) {
        out.values_[p] = f(grid->x(p), grid->y(p));
      } else {
        out.values_[p] = f(grid->x(p));
      }
    }
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  bool empty() const { return !grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Field& operator+=(const Field& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  /// Pointwise product.
  Field& operator*=(const Field& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  Field& operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
  }
  /// this += s * o
  Field& axpy(double s, const Field& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, const Field& b) { return a *= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator-(Field a) { return a *= -1.0; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Applies f pointwise.
template <class F>
Field map(const Field& u, F&& f) {
  Field out(u.grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i]);
  return out;
}

/// Fourier coefficients of a field.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->size()) {}

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  SpectralField& axpy(double s, const SpectralField& o) {
    require_same_grid(grid(), o.grid());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  GridPtr grid_;
  std::vector<Complex> coeffs_;
};

inline SpectralField to_spectral(const Field& u) {
  SpectralField out(u.grid_ptr());
  std::vector<Complex> in(u.values().begin(), u.values().end());
  u.grid().forward(in.data(), out.coeffs().data());
  out *= 1.0 / static_cast<double>(u.size());
  return out;
}

/// Inverse transform; the (roundoff-level) imaginary part is discarded.
inline Field from_spectral(const SpectralField& c) {
  std::vector<Complex> out(c.size());
  c.grid().backward(c.coeffs().data(), out.data());
  Field u(c.grid_ptr());
  for (std::size_t i = 0; i < out.size(); ++i) u[i] = out[i].real();
  return u;
}

/// Multiplies every coefficient by symbol(k). The symbol may return a real or
/// complex value.
template <class Symbol>
SpectralField apply_symbol(SpectralField c, Symbol&& symbol) {
  const Grid& g = c.grid();
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= symbol(g.wavevector(p));
  return c;
}

template <class Symbol>
Field apply_symbol(const Field& u, Symbol&& symbol) {
  return from_spectral(apply_symbol(to_spectral(u), std::forward<Symbol>(symbol)));
}

/// Spectral derivative with per-axis orders. Odd orders drop the Nyquist mode.
inline SpectralField diff(SpectralField c, std::array<int, 2> orders) {
  const Grid& g = c.grid();
  if (orders[0] < 0 || orders[1] < 0) throw InvalidArgument("derivative orders must be non-negative");
  if (g.dim() == 1 && orders[1] != 0) throw InvalidArgument("y-derivative of a 1D field");
  const std::size_t nx = static_cast<std::size_t>(g.n(0));
  for (std::size_t p = 0; p < c.size(); ++p) {
    Complex factor = 1.0;
    for (int d = 0; d < g.dim(); ++d) {
      if (orders[d] == 0) continue;
      const std::size_t idx = d == 0 ? p % nx : p / nx;
      const double k = (orders[d] % 2 == 1) ? g.odd_wavenumbers(d)[idx] : g.wavenumbers(d)[idx];
      // (i k)^n = k^n i^n with i^n taken exactly
      const double kn = std::pow(k, orders[d]);
      switch (orders[d] % 4) {
        case 0: factor *= kn; break;
        case 1: factor *= Complex(0.0, kn); break;
        case 2: factor *= -kn; break;
        default: factor *= Complex(0.0, -kn); break;
      }
    }
    c[p] *= factor;
  }
  return c;
}

inline Field diff(const Field& u, std::array<int, 2> orders) { return from_spectral(diff(to_spectral(u), orders)); }

/// Gradient components (one per axis).
inline std::vector<Field> gradient(const SpectralField& c) {
  std::vector<Field> out;
  for (int d = 0; d < c.grid().dim(); ++d) {
    std::array<int, 2> o{0, 0};
    o[d] = 1;
    out.push_back(from_spectral(diff(c, o)));
  }
  return out;
}
inline std::vector<Field> gradient(const Field& u) { return gradient(to_spectral(u)); }

/// Coefficients of the divergence of a vector field.
inline SpectralField divergence_spectral(std::span<const Field> v) {
  if (v.empty()) throw InvalidArgument("divergence of an empty vector field");
  SpectralField acc(v[0].grid_ptr());
  for (int d = 0; d < static_cast<int>(v.size()); ++d) {
    std::array<int, 2> o{0, 0};
    o[d] = 1;
    acc += diff(to_spectral(v[d]), o);
  }
  return acc;
}
inline Field divergence(std::span<const Field> v) { return from_spectral(divergence_spectral(v)); }

inline SpectralField laplacian(SpectralField c) {
  return apply_symbol(std::move(c), [](Wavevector k) { return -k.norm_sq(); });
}
inline Field laplacian(const Field& u) { return from_spectral(laplacian(to_spectral(u))); }
inline Field bilaplacian(const Field& u) {
  return apply_symbol(u, [](Wavevector k) { return k.norm_sq() * k.norm_sq(); });
}

/// Solves symbol(k) * u_k = rhs_k mode by mode. A mode with a vanishing symbol
/// is accepted only when the rhs has (numerically) no content there; the
/// solution is set to zero on that mode.
template <class Symbol>
SpectralField solve_diagonal(SpectralField rhs, Symbol&& symbol) {
  const Grid& g = rhs.grid();
  double scale = 0.0;
  for (const auto& c : rhs.coeffs()) scale = std::max(scale, std::abs(c));
  for (std::size_t p = 0; p < rhs.size(); ++p) {
    const double s = symbol(g.wavevector(p));
    if (std::abs(s) < 1e-300) {
      if (std::abs(rhs[p]) > 1e-12 * scale) throw SingularOperator("diagonal operator is singular on a forced mode");
      rhs[p] = 0.0;
    } else {
      rhs[p] /= s;
    }
  }
  return rhs;
}

template <class Symbol>
Field solve_diagonal(const Field& rhs, Symbol&& symbol) {
  return from_spectral(solve_diagonal(to_spectral(rhs), std::forward<Symbol>(symbol)));
}

/// Grid quadrature: mean value times |Omega|.
inline double integrate(const Field& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s / static_cast<double>(u.size()) * u.grid().volume();
}

inline double mean(const Field& u) { return integrate(u) / u.grid().volume(); }

inline double inner(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / static_cast<double>(a.size()) * a.grid().volume();
}

inline double l2_norm(const Field& u) { return std::sqrt(inner(u, u)); }

/// Sum over modes of |Omega| * weight(k) * |c_k|^2.
template <class Weight>
double weighted_spectral_sum(const SpectralField& c, Weight&& weight) {
  const Grid& g = c.grid();
  double s = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) s += weight(g.wavevector(p)) * std::norm(c[p]);
  return s * g.volume();
}

/// ||grad u||^2 = -(u, Laplacian u), computed with the Laplacian's symbol.
inline double grad_norm_sq(const SpectralField& c) {
  return weighted_spectral_sum(c, [](Wavevector k) { return k.norm_sq(); });
}
inline double grad_norm_sq(const Field& u) { return grad_norm_sq(to_spectral(u)); }

/// ||grad^{-1} u||^2 = sum_{k != 0} |c_k|^2 / |k|^2 (times |Omega|). The input
/// must have zero mean: |mean| <= 1e-10 * rms(u) + abs_tol.
inline double inv_grad_norm_sq(const Field& u, double abs_tol = 0.0) {
  const double rms = l2_norm(u) / std::sqrt(u.grid().volume());
  const double avg = mean(u);
  if (std::abs(avg) > 1e-10 * rms + abs_tol) throw NotMeanZero("inverse gradient norm of a field with nonzero mean");
  return weighted_spectral_sum(to_spectral(u), [](Wavevector k) {
    const double k2 = k.norm_sq();
    return k2 > 0.0 ? 1.0 / k2 : 0.0;
  });
}

/// 2/3-rule truncation: zeroes every mode with |m_d| > n_d / 3 on some axis.
inline SpectralField dealias(SpectralField c) {
  const Grid& g = c.grid();
  for (std::size_t p = 0; p < c.size(); ++p) {
    const auto m = g.mode(p);
    for (int d = 0; d < g.dim(); ++d) {
      if (3 * std::abs(m[d]) > g.n(d)) {
        c[p] = 0.0;
        break;
      }
    }
  }
  return c;
}
inline Field dealias(const Field& u) { return from_spectral(dealias(to_spectral(u))); }

}  // namespace anich
