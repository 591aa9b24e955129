#include "diffreg/problems.hpp"

#include <algorithm>
#include <cmath>

#include "diffreg/errors.hpp"

namespace diffreg {

RegistrationProblem make_problem(ScalarField reference, ScalarField template_image,
                                 bool incompressible, std::string provenance) {
  require_same_grid(reference.grid(), template_image.grid(), "registration problem");
  if (!reference.all_finite() || !template_image.all_finite()) {
    throw InputError("registration images must have finite intensities");
  }
  return RegistrationProblem{std::move(reference), std::move(template_image), incompressible,
                             false, std::move(provenance)};
}

ScalarField synthetic_template(const Grid& grid) {
  return ScalarField::from_function(grid, [](double x1, double x2, double x3) {
    const double s1 = std::sin(x1), s2 = std::sin(x2), s3 = std::sin(x3);
    return (s1 * s1 + s2 * s2 + s3 * s3) / 3.0;
  });
}

VectorField synthetic_velocity(const Grid& grid, bool incompressible) {
  if (incompressible) {
    return VectorField::from_function(grid, [](double x1, double x2, double x3) {
      return std::array<double, 3>{std::sin(x2) * std::cos(x3), std::sin(x3) * std::cos(x1),
                                   std::sin(x1) * std::cos(x2)};
    });
  }
  return VectorField::from_function(grid, [](double x1, double x2, double x3) {
    return std::array<double, 3>{std::cos(x1) * std::sin(x2), std::cos(x2) * std::sin(x1),
                                 std::cos(x1) * std::sin(x3)};
  });
}

SyntheticProblem make_synthetic(const Grid& grid, bool incompressible, int n_t,
                                const VectorField& velocity,
                                const std::optional<PencilPartition>& partition) {
  SpectralOps spectral(grid);
  const Interpolator interp(partition.value_or(PencilPartition(grid, 1, 1)));
  TransportSolver transport(spectral, interp, n_t);
  ScalarField rho_t = synthetic_template(grid);
  TimeSeries rho = transport.solve_state(velocity, rho_t);
  SyntheticProblem out{
      make_problem(rho.back(), std::move(rho_t), incompressible,
                   std::string("synthetic ") + (incompressible ? "incompressible" : "compressible") +
                       " n_t=" + std::to_string(n_t)),
      velocity};
  out.problem.preprocessed = true;  // analytic, smooth and periodic
  return out;
}

SyntheticProblem make_synthetic(const Grid& grid, bool incompressible, int n_t,
                                const std::optional<PencilPartition>& partition) {
  return make_synthetic(grid, incompressible, n_t, synthetic_velocity(grid, incompressible),
                        partition);
}

std::array<int, 3> default_padding(const std::array<int, 3>& dims) {
  return {dims[0] / 8, dims[1] / 8, dims[2] / 8};
}

ScalarField preprocess(const ScalarField& raw, const PreprocessOptions& options) {
  const Grid& rg = raw.grid();
  const std::array<int, 3> pad = options.pad.value_or(default_padding(rg.dims()));
  for (int p : pad) {
    if (p < 0) throw ParameterError("preprocess: padding must be non-negative");
  }
  const Grid padded(rg.dim(0) + 2 * pad[0], rg.dim(1) + 2 * pad[1], rg.dim(2) + 2 * pad[2]);
  ScalarField embedded(padded);
  for (int i3 = 0; i3 < rg.dim(2); ++i3) {
    for (int i2 = 0; i2 < rg.dim(1); ++i2) {
      for (int i1 = 0; i1 < rg.dim(0); ++i1) {
        embedded.at(i1 + pad[0], i2 + pad[1], i3 + pad[2]) = raw.at(i1, i2, i3);
      }
    }
  }
  SpectralOps spectral(padded);
  ScalarField out = options.sigma ? spectral.gaussian_smooth(embedded, *options.sigma)
                                  : spectral.gaussian_smooth(embedded);
  if (options.rescale) {
    const double lo = out.min();
    const double hi = out.max();
    const double range = hi - lo;
    for (double& v : out.values()) v = range > 0.0 ? (v - lo) / range : 0.0;
  }
  return out;
}

QualityMetrics quality_metrics(SpectralOps& spectral, const RegistrationProblem& problem,
                               const VectorField& velocity, const DeformationMap& map,
                               const ScalarField& deformed_template) {
  QualityMetrics m;
  ScalarField r1(deformed_template);
  axpy(-1.0, problem.reference, r1);
  ScalarField r0(problem.template_image);
  axpy(-1.0, problem.reference, r0);
  const double denom = norm(r0);
  m.relative_misfit = denom > 0.0 ? norm(r1) / denom : 0.0;

  const ScalarField det = det_deformation_gradient(spectral, map.displacement);
  m.det_min = det.min();
  m.det_max = det.max();
  m.det_mean = det.sum() / static_cast<double>(det.size());
  m.max_det_deviation = 0.0;
  for (double d : det.values()) m.max_det_deviation = std::max(m.max_det_deviation, std::abs(d - 1.0));
  m.diffeomorphic = m.det_min > 0.0;

  m.div_norm = norm(spectral.divergence(velocity));
  const double vnorm = norm(velocity);
  m.div_relative = vnorm > 0.0 ? m.div_norm / vnorm : 0.0;
  return m;
}

}  // namespace diffreg
