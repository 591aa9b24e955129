#include "diffreg/transport.hpp"

#include <algorithm>
#include <string>

#include "diffreg/errors.hpp"

namespace diffreg {

namespace {

std::vector<Point3> grid_points(const Grid& g) {
  std::vector<Point3> pts(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto n = g.unravel(idx);
    pts[idx] = {g.coord(0, n[0]), g.coord(1, n[1]), g.coord(2, n[2])};
  }
  return pts;
}

TimeSeries make_series(int n_t, const ScalarField& first) {
  TimeSeries s;
  s.slices.reserve(n_t + 1);
  s.slices.push_back(first);
  return s;
}

void reverse_in_time(TimeSeries& s) { std::reverse(s.slices.begin(), s.slices.end()); }

}  // namespace

ScalarField negative_dot(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "negative_dot");
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = -(a[0][i] * b[0][i] + a[1][i] * b[1][i] + a[2][i] * b[2][i]);
  }
  return out;
}

VectorField DeformationMap::positions() const {
  const Grid& g = displacement.grid();
  VectorField y(g);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto n = g.unravel(idx);
    for (int c = 0; c < 3; ++c) {
      y[c][idx] = wrap_coordinate(g.coord(c, n[c]) + displacement[c][idx]);
    }
  }
  return y;
}

TransportSolver::TransportSolver(SpectralOps& spectral, const Interpolator& interp, int n_t)
    : spectral_(spectral), interp_(interp), n_t_(n_t) {
  if (n_t < 1) throw ParameterError("number of time steps must be >= 1");
  require_same_grid(spectral.grid(), interp.grid(), "transport solver");
}

DeparturePoints TransportSolver::departure_points(const VectorField& v, Direction direction) {
  const Grid& g = grid();
  require_same_grid(g, v.grid(), "departure_points");
  const double s = static_cast<double>(static_cast<int>(direction));
  const double dt = this->dt();
  std::vector<Point3> pts = grid_points(g);

  std::vector<Point3> star(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int c = 0; c < 3; ++c) star[i][c] = wrap_coordinate(pts[i][c] - s * dt * v[c][i]);
  }
  const InterpolationPlan star_plan = interp_.plan(star);
  std::array<std::vector<double>, 3> v_star;
  for (int c = 0; c < 3; ++c) v_star[c] = interp_.interpolate_points(star_plan, v[c]);

  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      pts[i][c] = wrap_coordinate(pts[i][c] - s * 0.5 * dt * (v[c][i] + v_star[c][i]));
    }
  }
  InterpolationPlan plan = interp_.plan(pts);
  if (OpCounters* counters = interp_.counters()) counters->add_departure_build();
  return DeparturePoints{direction, dt, std::move(pts), std::move(plan)};
}

ScalarField TransportSolver::advect_step(const ScalarField& nu0, const DeparturePoints& X,
                                         const SourceFn* source, int step) {
  require_same_grid(grid(), nu0.grid(), "advect_step");
  ScalarField nu = interp_.interpolate(X.plan, nu0);
  if (source == nullptr || !*source) return nu;

  const double dt = X.dt;
  const ScalarField f0 = interp_.interpolate(X.plan, (*source)(nu0, step, 0));
  ScalarField predictor = nu;
  axpy(dt, f0, predictor);
  const ScalarField f_star = (*source)(predictor, step, 1);
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] += 0.5 * dt * (f0[i] + f_star[i]);
  return nu;
}

TimeSeries TransportSolver::solve_state(const DeparturePoints& forward,
                                        const ScalarField& rho_template) {
  if (forward.direction != Direction::Forward) {
    throw ParameterError("solve_state needs forward departure points");
  }
  TimeSeries rho = make_series(n_t_, rho_template);
  for (int n = 0; n < n_t_; ++n) rho.slices.push_back(advect_step(rho[n], forward));
  return rho;
}

TimeSeries TransportSolver::solve_state(const VectorField& v, const ScalarField& rho_template) {
  return solve_state(departure_points(v, Direction::Forward), rho_template);
}

TimeSeries TransportSolver::solve_adjoint(const DeparturePoints& backward,
                                          const ScalarField& div_v,
                                          const ScalarField& lambda_final) {
  if (backward.direction != Direction::Backward) {
    throw ParameterError("solve_adjoint needs backward departure points");
  }
  const SourceFn source = [&div_v](const ScalarField& nu, int, int) {
    ScalarField f(nu.grid());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = nu[i] * div_v[i];
    return f;
  };
  TimeSeries lam = make_series(n_t_, lambda_final);
  for (int n = 0; n < n_t_; ++n) lam.slices.push_back(advect_step(lam[n], backward, &source, n));
  reverse_in_time(lam);
  return lam;
}

TimeSeries TransportSolver::solve_adjoint(const VectorField& v, const ScalarField& lambda_final) {
  const ScalarField div_v = spectral_.divergence(v);
  return solve_adjoint(departure_points(v, Direction::Backward), div_v, lambda_final);
}

TimeSeries TransportSolver::solve_inc_state(const DeparturePoints& forward,
                                            const VectorField& v_tilde, const TimeSeries& rho) {
  if (rho.n_t() != n_t_) {
    throw DimensionError("solve_inc_state: state series has " + std::to_string(rho.n_t()) +
                         " steps, expected " + std::to_string(n_t_));
  }
  require_same_grid(grid(), v_tilde.grid(), "solve_inc_state");
  const SourceFn source = [&](const ScalarField&, int step, int level) {
    return negative_dot(v_tilde, spectral_.gradient(rho[step + level]));
  };
  TimeSeries rho_tilde = make_series(n_t_, ScalarField(grid()));
  for (int n = 0; n < n_t_; ++n) {
    rho_tilde.slices.push_back(advect_step(rho_tilde[n], forward, &source, n));
  }
  return rho_tilde;
}

TimeSeries TransportSolver::solve_inc_adjoint(const DeparturePoints& backward,
                                              const ScalarField& div_v,
                                              const VectorField& v_tilde,
                                              const TimeSeries* lambda,
                                              const ScalarField& rho_tilde_final,
                                              HessianMode mode) {
  if (mode == HessianMode::FullNewton) {
    if (lambda == nullptr) {
      throw ParameterError("solve_inc_adjoint: full Newton mode needs the adjoint series");
    }
    if (lambda->n_t() != n_t_) throw DimensionError("solve_inc_adjoint: adjoint series length");
  }
  const SourceFn source = [&](const ScalarField& nu, int step, int level) {
    ScalarField f(nu.grid());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = nu[i] * div_v[i];
    if (mode == HessianMode::FullNewton) {
      const ScalarField& lam = (*lambda)[n_t_ - step - level];
      VectorField flux(v_tilde);
      for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < f.size(); ++i) flux[c][i] *= lam[i];
      }
      axpy(1.0, spectral_.divergence(flux), f);
    }
    return f;
  };
  ScalarField final_condition(rho_tilde_final);
  scale(final_condition, -1.0);
  TimeSeries lam_tilde = make_series(n_t_, final_condition);
  for (int n = 0; n < n_t_; ++n) {
    lam_tilde.slices.push_back(advect_step(lam_tilde[n], backward, &source, n));
  }
  reverse_in_time(lam_tilde);
  return lam_tilde;
}

DeformationMap TransportSolver::deformation_map(const DeparturePoints& forward,
                                                const VectorField& v) {
  if (forward.direction != Direction::Forward) {
    throw ParameterError("deformation_map needs forward departure points");
  }
  VectorField u(grid());
  for (int c = 0; c < 3; ++c) {
    ScalarField minus_v(v[c]);
    scale(minus_v, -1.0);
    const SourceFn source = [&minus_v](const ScalarField&, int, int) { return minus_v; };
    for (int n = 0; n < n_t_; ++n) u[c] = advect_step(u[c], forward, &source, n);
  }
  return DeformationMap{std::move(u)};
}

DeformationMap TransportSolver::deformation_map(const VectorField& v) {
  return deformation_map(departure_points(v, Direction::Forward), v);
}

ScalarField det_deformation_gradient(SpectralOps& spectral, const VectorField& displacement) {
  const VectorField d0 = spectral.gradient(displacement[0]);
  const VectorField d1 = spectral.gradient(displacement[1]);
  const VectorField d2 = spectral.gradient(displacement[2]);
  ScalarField det(displacement.grid());
  for (std::size_t i = 0; i < det.size(); ++i) {
    const double a11 = 1.0 + d0[0][i], a12 = d0[1][i], a13 = d0[2][i];
    const double a21 = d1[0][i], a22 = 1.0 + d1[1][i], a23 = d1[2][i];
    const double a31 = d2[0][i], a32 = d2[1][i], a33 = 1.0 + d2[2][i];
    det[i] = a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
             a13 * (a21 * a32 - a22 * a31);
  }
  return det;
}

}  // namespace diffreg
