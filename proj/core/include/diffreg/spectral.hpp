#pragma once

#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "diffreg/counters.hpp"
#include "diffreg/grid.hpp"

namespace diffreg {

/// Signed wavenumber of FFT index `i` on an axis with `n` points, in
/// (-n/2, n/2]. The Nyquist index maps to +n/2.
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

/// Wavenumber used in first-derivative symbols: as wavenumber() but the
/// Nyquist mode is zeroed.
inline int derivative_wavenumber(int i, int n) { return i == n / 2 ? 0 : wavenumber(i, n); }

/// Half-spectrum coefficients of a real field (r2c layout, k1 is the halved
/// axis): index = j1 + (N1/2+1) * (j2 + N2 * j3).
struct SpectralCoefficients {
  Grid grid;
  std::vector<std::complex<double>> coeffs;

  int half_dim() const { return grid.dim(0) / 2 + 1; }
};

/// Componentwise spectra of a vector field.
using VectorSpectrum = std::array<SpectralCoefficients, 3>;

/// Spatial operators applied through forward FFT, a diagonal symbol, and
/// inverse FFT on the full periodic grid.
///
/// Each instance owns an FFT workspace and is therefore not thread-safe; use
/// one instance per worker. Transforms use FFTW_ESTIMATE plans, so a given
/// input always produces bitwise-identical output.
///
/// Every 3-D scalar transform (forward or inverse) increments the FFT counter.
class SpectralOps {
 public:
  explicit SpectralOps(const Grid& grid, OpCounters* counters = nullptr);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;
  SpectralOps(SpectralOps&&) noexcept;
  SpectralOps& operator=(SpectralOps&&) noexcept;

  const Grid& grid() const { return grid_; }

  SpectralCoefficients forward(const ScalarField& f);
  ScalarField inverse(const SpectralCoefficients& c);

  VectorSpectrum forward(const VectorField& v);

  VectorField gradient(const ScalarField& f);
  ScalarField divergence(const VectorField& v);
  /// Divergence from already transformed components (one inverse transform).
  ScalarField divergence(const VectorSpectrum& v_hat);

  /// Componentwise Delta^2, symbol |k|^4.
  VectorField biharmonic(const VectorField& v);
  /// Componentwise inverse of beta*Delta^2 with symbol 1/(beta*max(|k|^4, 1)).
  VectorField inv_biharmonic(const VectorField& v, double beta);
  /// Delta^{-1} with the mean mode mapped to zero.
  ScalarField inv_laplacian(const ScalarField& f);
  /// I - grad Delta^{-1} div. Output is divergence-free against divergence().
  VectorField leray_project(const VectorField& v);

  /// beta * Delta^2 a + P b in one pass, with P the Leray projection when
  /// `project` is set and the identity otherwise. Costs three forward and
  /// three inverse transforms on top of the supplied spectrum of a.
  VectorField regularized_sum(const VectorSpectrum& a_hat, double beta, const VectorField& b,
                              bool project);
  /// Multiplies by exp(-1/2 * sum_j k_j^2 sigma_j^2).
  ScalarField gaussian_smooth(const ScalarField& f, const std::array<double, 3>& sigma);
  /// Default bandwidth sigma_j = 2*pi/N_j.
  ScalarField gaussian_smooth(const ScalarField& f);

  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    const int m1 = grid_.dim(0) / 2 + 1;
    std::size_t c = 0;
    for (int j3 = 0; j3 < grid_.dim(2); ++j3) {
      for (int j2 = 0; j2 < grid_.dim(1); ++j2) {
        for (int j1 = 0; j1 < m1; ++j1, ++c) fn(c, j1, j2, j3);
      }
    }
  }

 private:
  struct Workspace;

  void leray_in_place(VectorSpectrum& vh) const;
  VectorField apply_componentwise(const VectorField& v,
                                  const std::function<double(int, int, int)>& symbol);

  Grid grid_;
  OpCounters* counters_;
  std::unique_ptr<Workspace> ws_;
};

}  // namespace diffreg
