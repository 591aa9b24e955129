#pragma once

#include <functional>
#include <vector>

#include "diffreg/grid.hpp"
#include "diffreg/interp.hpp"
#include "diffreg/spectral.hpp"

namespace diffreg {

/// +v for state-like sweeps forward in t, -v for adjoint-like sweeps in tau = 1 - t.
enum class Direction : int { Forward = 1, Backward = -1 };

enum class HessianMode { GaussNewton, FullNewton };

/// Feet of the RK2 characteristics through every grid node over one step.
struct DeparturePoints {
  Direction direction;
  double dt;
  std::vector<Point3> positions;  // wrapped into [0, 2*pi)^3
  InterpolationPlan plan;
};

/// Right-hand side of a transport equation, evaluated on the grid.
/// `level` 0 is the start of step `step` (nu = nu(x, t_n)); level 1 is its
/// end (nu = predictor).
using SourceFn = std::function<ScalarField(const ScalarField& nu, int step, int level)>;

/// Displacement u = y1 - x of the deformation map at t = 1.
struct DeformationMap {
  VectorField displacement;

  /// y1 = x + u, wrapped into the periodic domain.
  VectorField positions() const;
};

/// RK2 semi-Lagrangian solver for the state, adjoint and incremental
/// transport problems with a stationary velocity on [0, 1].
///
/// Adjoint-type equations are integrated in tau = 1 - t with velocity -v;
/// the returned series are always in t order (slice k is time k/n_t).
class TransportSolver {
 public:
  TransportSolver(SpectralOps& spectral, const Interpolator& interp, int n_t);

  int n_t() const { return n_t_; }
  double dt() const { return 1.0 / n_t_; }
  const Grid& grid() const { return spectral_.grid(); }
  SpectralOps& spectral() { return spectral_; }
  const Interpolator& interpolator() const { return interp_; }

  /// X* = x - s*dt*v(x); X = x - s*dt/2*(v(x) + v(X*)), s = +1/-1 by direction.
  DeparturePoints departure_points(const VectorField& v, Direction direction);

  /// One RK2 step: nu(x, t+dt) = nu0(X) + dt/2*(f0(X) + f*(x)). Sources are
  /// evaluated on the grid and interpolated. Without a source this is a single
  /// interpolation.
  ScalarField advect_step(const ScalarField& nu0, const DeparturePoints& X,
                          const SourceFn* source = nullptr, int step = 0);

  /// d_t rho + v.grad rho = 0, rho(0) = rho_T.
  TimeSeries solve_state(const DeparturePoints& forward, const ScalarField& rho_template);
  TimeSeries solve_state(const VectorField& v, const ScalarField& rho_template);

  /// -d_t lambda - div(lambda v) = 0, lambda(1) = lambda_final.
  /// In tau: advection with -v and source lambda*div v.
  TimeSeries solve_adjoint(const DeparturePoints& backward, const ScalarField& div_v,
                           const ScalarField& lambda_final);
  TimeSeries solve_adjoint(const VectorField& v, const ScalarField& lambda_final);

  /// d_t rho~ + v.grad rho~ + v~.grad rho = 0, rho~(0) = 0, one step at a
  /// time: interpolate rho~_0 at X, spectral grad rho(t_n), f0 = -v~.grad rho,
  /// interpolate f0 at X, predictor, spectral grad rho(t_{n+1}), corrector.
  TimeSeries solve_inc_state(const DeparturePoints& forward, const VectorField& v_tilde,
                             const TimeSeries& rho);

  /// -d_t lam~ - div(lam~ v + lam v~) = 0, lam~(1) = -rho~(1). Gauss-Newton
  /// drops div(lam v~), in which case `lambda` may be null.
  TimeSeries solve_inc_adjoint(const DeparturePoints& backward, const ScalarField& div_v,
                               const VectorField& v_tilde, const TimeSeries* lambda,
                               const ScalarField& rho_tilde_final, HessianMode mode);

  /// Solves d_t u + v.grad u = -v, u(0) = 0 componentwise, so y1 = x + u(1).
  DeformationMap deformation_map(const DeparturePoints& forward, const VectorField& v);
  DeformationMap deformation_map(const VectorField& v);

 private:
  SpectralOps& spectral_;
  const Interpolator& interp_;
  int n_t_;
};

/// det(I + grad u) with spectral derivatives of the displacement u.
ScalarField det_deformation_gradient(SpectralOps& spectral, const VectorField& displacement);

/// -a.b pointwise, the incremental-state source.
ScalarField negative_dot(const VectorField& a, const VectorField& b);

}  // namespace diffreg
