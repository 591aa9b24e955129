#include "diffreg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

#include "diffreg/errors.hpp"

namespace diffreg {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralOps::Workspace {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  std::size_t n_real = 0;
  std::size_t n_spec = 0;

  explicit Workspace(const Grid& g) {
    n_real = g.size();
    n_spec = static_cast<std::size_t>(g.dim(0) / 2 + 1) * g.dim(1) * g.dim(2);
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(n_real);
    spec = fftw_alloc_complex(n_spec);
    // FFTW is row-major with the last index fastest, so axes are passed reversed.
    r2c = fftw_plan_dft_r2c_3d(g.dim(2), g.dim(1), g.dim(0), real, spec, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_3d(g.dim(2), g.dim(1), g.dim(0), spec, real, FFTW_ESTIMATE);
  }

  ~Workspace() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spec);
  }
};

SpectralOps::SpectralOps(const Grid& grid, OpCounters* counters)
    : grid_(grid), counters_(counters), ws_(std::make_unique<Workspace>(grid)) {}

SpectralOps::~SpectralOps() = default;
SpectralOps::SpectralOps(SpectralOps&&) noexcept = default;
SpectralOps& SpectralOps::operator=(SpectralOps&&) noexcept = default;

SpectralCoefficients SpectralOps::forward(const ScalarField& f) {
  require_same_grid(grid_, f.grid(), "spectral forward");
  std::memcpy(ws_->real, f.data(), ws_->n_real * sizeof(double));
  fftw_execute(ws_->r2c);
  if (counters_) counters_->add_fft();
  SpectralCoefficients out{grid_, std::vector<std::complex<double>>(ws_->n_spec)};
  std::memcpy(static_cast<void*>(out.coeffs.data()), ws_->spec, ws_->n_spec * sizeof(fftw_complex));
  return out;
}

ScalarField SpectralOps::inverse(const SpectralCoefficients& c) {
  require_same_grid(grid_, c.grid, "spectral inverse");
  std::memcpy(ws_->spec, c.coeffs.data(), ws_->n_spec * sizeof(fftw_complex));
  fftw_execute(ws_->c2r);
  if (counters_) counters_->add_fft();
  ScalarField out(grid_);
  const double norm = 1.0 / static_cast<double>(ws_->n_real);
  double* o = out.data();
  for (std::size_t i = 0; i < ws_->n_real; ++i) o[i] = ws_->real[i] * norm;
  return out;
}

VectorField SpectralOps::gradient(const ScalarField& f) {
  const SpectralCoefficients fh = forward(f);
  const auto& d = grid_.dims();
  VectorField out(grid_);
  for (int axis = 0; axis < 3; ++axis) {
    SpectralCoefficients gh = fh;
    for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
      const int j[3] = {j1, j2, j3};
      const double k = derivative_wavenumber(j[axis], d[axis]);
      gh.coeffs[c] *= std::complex<double>(0.0, k);
    });
    out[axis] = inverse(gh);
  }
  return out;
}

VectorSpectrum SpectralOps::forward(const VectorField& v) {
  return {forward(v[0]), forward(v[1]), forward(v[2])};
}

ScalarField SpectralOps::divergence(const VectorField& v) { return divergence(forward(v)); }

ScalarField SpectralOps::divergence(const VectorSpectrum& vh) {
  const auto& d = grid_.dims();
  SpectralCoefficients acc{grid_, std::vector<std::complex<double>>(ws_->n_spec)};
  for (int axis = 0; axis < 3; ++axis) {
    require_same_grid(grid_, vh[axis].grid, "spectral divergence");
    for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
      const int j[3] = {j1, j2, j3};
      const double k = derivative_wavenumber(j[axis], d[axis]);
      acc.coeffs[c] += std::complex<double>(0.0, k) * vh[axis].coeffs[c];
    });
  }
  return inverse(acc);
}

VectorField SpectralOps::apply_componentwise(const VectorField& v,
                                             const std::function<double(int, int, int)>& symbol) {
  const auto& d = grid_.dims();
  std::vector<double> sym(ws_->n_spec);
  for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
    sym[c] = symbol(j1, wavenumber(j2, d[1]), wavenumber(j3, d[2]));
  });
  VectorField out(grid_);
  for (int comp = 0; comp < 3; ++comp) {
    SpectralCoefficients vh = forward(v[comp]);
    for (std::size_t c = 0; c < vh.coeffs.size(); ++c) vh.coeffs[c] *= sym[c];
    out[comp] = inverse(vh);
  }
  return out;
}

VectorField SpectralOps::biharmonic(const VectorField& v) {
  return apply_componentwise(v, [](int k1, int k2, int k3) {
    const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2 +
                      static_cast<double>(k3) * k3;
    return kk * kk;
  });
}

VectorField SpectralOps::inv_biharmonic(const VectorField& v, double beta) {
  if (!(beta > 0.0)) throw ParameterError("inv_biharmonic: beta must be positive");
  return apply_componentwise(v, [beta](int k1, int k2, int k3) {
    const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2 +
                      static_cast<double>(k3) * k3;
    return 1.0 / (beta * std::max(kk * kk, 1.0));
  });
}

ScalarField SpectralOps::inv_laplacian(const ScalarField& f) {
  const auto& d = grid_.dims();
  SpectralCoefficients fh = forward(f);
  for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
    const double k1 = derivative_wavenumber(j1, d[0]);
    const double k2 = derivative_wavenumber(j2, d[1]);
    const double k3 = derivative_wavenumber(j3, d[2]);
    const double kk = k1 * k1 + k2 * k2 + k3 * k3;
    fh.coeffs[c] = kk > 0.0 ? fh.coeffs[c] * (-1.0 / kk) : std::complex<double>(0.0);
  });
  return inverse(fh);
}

void SpectralOps::leray_in_place(VectorSpectrum& vh) const {
  const auto& d = grid_.dims();
  for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
    const double k[3] = {static_cast<double>(derivative_wavenumber(j1, d[0])),
                         static_cast<double>(derivative_wavenumber(j2, d[1])),
                         static_cast<double>(derivative_wavenumber(j3, d[2]))};
    const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (kk == 0.0) return;
    const std::complex<double> dot =
        (k[0] * vh[0].coeffs[c] + k[1] * vh[1].coeffs[c] + k[2] * vh[2].coeffs[c]) / kk;
    for (int a = 0; a < 3; ++a) vh[a].coeffs[c] -= k[a] * dot;
  });
}

VectorField SpectralOps::leray_project(const VectorField& v) {
  VectorSpectrum vh = forward(v);
  leray_in_place(vh);
  return VectorField(inverse(vh[0]), inverse(vh[1]), inverse(vh[2]));
}

VectorField SpectralOps::regularized_sum(const VectorSpectrum& a_hat, double beta,
                                         const VectorField& b, bool project) {
  const auto& d = grid_.dims();
  VectorSpectrum bh = forward(b);
  if (project) leray_in_place(bh);
  for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
    const double k2 = wavenumber(j2, d[1]);
    const double k3 = wavenumber(j3, d[2]);
    const double kk = static_cast<double>(j1) * j1 + k2 * k2 + k3 * k3;
    const double sym = beta * kk * kk;
    for (int a = 0; a < 3; ++a) bh[a].coeffs[c] += sym * a_hat[a].coeffs[c];
  });
  return VectorField(inverse(bh[0]), inverse(bh[1]), inverse(bh[2]));
}

ScalarField SpectralOps::gaussian_smooth(const ScalarField& f, const std::array<double, 3>& sigma) {
  for (double s : sigma) {
    if (!(s > 0.0)) throw ParameterError("gaussian_smooth: bandwidth must be positive");
  }
  const auto& d = grid_.dims();
  SpectralCoefficients fh = forward(f);
  for_each_mode([&](std::size_t c, int j1, int j2, int j3) {
    const double k1 = j1;
    const double k2 = wavenumber(j2, d[1]);
    const double k3 = wavenumber(j3, d[2]);
    const double e = k1 * k1 * sigma[0] * sigma[0] + k2 * k2 * sigma[1] * sigma[1] +
                     k3 * k3 * sigma[2] * sigma[2];
    fh.coeffs[c] *= std::exp(-0.5 * e);
  });
  return inverse(fh);
}

ScalarField SpectralOps::gaussian_smooth(const ScalarField& f) {
  return gaussian_smooth(f, {grid_.spacing(0), grid_.spacing(1), grid_.spacing(2)});
}

}  // namespace diffreg
