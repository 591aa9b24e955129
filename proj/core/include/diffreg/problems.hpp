#pragma once

#include <array>
#include <optional>
#include <string>

#include "diffreg/grid.hpp"
#include "diffreg/interp.hpp"
#include "diffreg/spectral.hpp"
#include "diffreg/transport.hpp"

namespace diffreg {

struct RegistrationProblem {
  ScalarField reference;
  ScalarField template_image;
  bool incompressible = false;
  bool preprocessed = false;  // smoothed/padded pipeline applied
  std::string provenance;

  const Grid& grid() const { return reference.grid(); }
};

/// Builds a problem and validates that both images share a finite grid.
RegistrationProblem make_problem(ScalarField reference, ScalarField template_image,
                                 bool incompressible, std::string provenance = {});

struct SyntheticProblem {
  RegistrationProblem problem;
  VectorField velocity;  // the velocity that generated the reference
};

/// (sin^2 x1 + sin^2 x2 + sin^2 x3) / 3
ScalarField synthetic_template(const Grid& grid);

/// Compressible: (cos x1 sin x2, cos x2 sin x1, cos x1 sin x3).
/// Incompressible: (sin x2 cos x3, sin x3 cos x1, sin x1 cos x2), which is
/// analytically divergence-free.
VectorField synthetic_velocity(const Grid& grid, bool incompressible);

/// Template from synthetic_template(); the reference is the state at t = 1
/// transported by `velocity` with n_t steps.
SyntheticProblem make_synthetic(const Grid& grid, bool incompressible, int n_t,
                                const VectorField& velocity,
                                const std::optional<PencilPartition>& partition = std::nullopt);
SyntheticProblem make_synthetic(const Grid& grid, bool incompressible, int n_t,
                                const std::optional<PencilPartition>& partition = std::nullopt);

struct PreprocessOptions {
  std::optional<std::array<int, 3>> pad;      // cells per side; default N_i / 8
  std::optional<std::array<double, 3>> sigma;  // default 2*pi/N_i of the padded grid
  bool rescale = true;                         // map intensities to [0, 1]
};

/// Default per-side padding for a raw volume of the given dimensions.
std::array<int, 3> default_padding(const std::array<int, 3>& dims);

/// Embeds `raw` centered in a zero background enlarged by `pad` cells per
/// side, smooths it with a Gaussian, and optionally rescales to [0, 1].
ScalarField preprocess(const ScalarField& raw, const PreprocessOptions& options = {});

struct QualityMetrics {
  double relative_misfit = 0.0;  // ||rho1 - rho_R|| / ||rho_T - rho_R||
  double det_min = 1.0;
  double det_max = 1.0;
  double det_mean = 1.0;
  double max_det_deviation = 0.0;  // max |det - 1|
  double div_norm = 0.0;           // ||div v||
  double div_relative = 0.0;       // ||div v|| / ||v||
  bool diffeomorphic = true;       // det_min > 0
};

QualityMetrics quality_metrics(SpectralOps& spectral, const RegistrationProblem& problem,
                               const VectorField& velocity, const DeformationMap& map,
                               const ScalarField& deformed_template);

}  // namespace diffreg
