#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diffreg/counters.hpp"
#include "diffreg/grid.hpp"
#include "diffreg/interp.hpp"
#include "diffreg/problems.hpp"
#include "diffreg/spectral.hpp"
#include "diffreg/transport.hpp"

namespace diffreg {

struct ArmijoParams {
  double c1 = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 20;
};

struct SolverConfig {
  double beta = 1e-2;
  int n_t = 4;
  double g_tol = 1e-2;  // relative to the initial gradient norm
  int max_newton = 50;
  int max_krylov = 100;
  HessianMode mode = HessianMode::GaussNewton;
  bool incompressible = false;
  ArmijoParams armijo;
  int tasks_p1 = 1;  // virtual partition used by the interpolation harness
  int tasks_p2 = 1;
  double min_det_bound = 0.0;  // continuation rejects a beta whose map has min det <= bound

  /// Throws ParameterError on out-of-range settings.
  void validate() const;
};

struct ObjectiveValue {
  double total = 0.0;
  double misfit = 0.0;
  double regularization = 0.0;
};

enum class Termination { Converged, MaxIterations, LineSearchFailed };

std::string to_string(Termination t);

/// One row per accepted iterate; row 0 is the initial guess.
struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double misfit = 0.0;
  double regularization = 0.0;
  double rel_grad = 0.0;
  int pcg_iters = 0;
  double step_length = 0.0;
  std::uint64_t cumulative_matvecs = 0;
  double rel_div = 0.0;  // ||div v|| / ||v||
  double beta = 0.0;
};

/// Matvec counts cover Hessian applications inside PCG only; line-search
/// objective evaluations are counted separately in line_search_evals.
struct SolverReport {
  std::vector<IterationRecord> iterations;
  Termination termination = Termination::MaxIterations;
  int n_t = 0;
  HessianMode mode = HessianMode::GaussNewton;
  bool incompressible = false;
  std::uint64_t matvecs = 0;
  std::uint64_t line_search_evals = 0;
  std::uint64_t gradient_evals = 0;
  std::uint64_t negative_curvature_events = 0;
  CounterSnapshot matvec_transport_ops;  // incremental state + adjoint solves
  CounterSnapshot matvec_total_ops;
  CounterSnapshot gradient_ops;
  std::uint64_t departure_builds = 0;
  double wall_seconds = 0.0;

  bool converged() const { return termination == Termination::Converged; }
  int newton_iterations() const { return static_cast<int>(iterations.size()) - 1; }
};

/// Reduced-space objective, gradient and Hessian action for one problem and
/// one beta. gradient() caches the state, adjoint, departure points and state
/// gradients that hessian_matvec() reuses until the next gradient() call.
///
/// Not thread-safe; one instance per solve.
class ReducedSpaceProblem {
 public:
  ReducedSpaceProblem(const RegistrationProblem& problem, const SolverConfig& config);
  ReducedSpaceProblem(const ReducedSpaceProblem&) = delete;
  ReducedSpaceProblem& operator=(const ReducedSpaceProblem&) = delete;

  const Grid& grid() const { return problem_.grid(); }
  const SolverConfig& config() const { return config_; }
  SpectralOps& spectral() { return spectral_; }
  TransportSolver& transport() { return transport_; }
  OpCounters& counters() { return counters_; }

  /// J = 1/2 ||rho(1) - rho_R||^2 + beta/2 ||Laplacian v||^2.
  ObjectiveValue objective(const VectorField& v);
  /// beta Delta^2 v + L int_0^1 lambda grad rho dt (L = Leray or identity).
  VectorField gradient(const VectorField& v);
  /// beta Delta^2 v~ + L b~; requires a preceding gradient() call.
  VectorField hessian_matvec(const VectorField& v_tilde);
  /// (beta Delta^2)^{-1}, followed by the Leray projection when incompressible.
  VectorField precondition(const VectorField& r);
  /// Leray projection when incompressible, identity otherwise.
  VectorField project(const VectorField& v);

  /// State at t = 1 of the last objective evaluation.
  const ScalarField& deformed_template() const;
  const TimeSeries& cached_state() const;
  const TimeSeries& cached_adjoint() const;
  bool has_linearization() const { return lin_.has_value(); }

  std::uint64_t matvecs() const { return matvecs_; }
  std::uint64_t gradient_evals() const { return gradient_evals_; }
  const CounterSnapshot& matvec_transport_ops() const { return matvec_transport_ops_; }
  const CounterSnapshot& matvec_total_ops() const { return matvec_total_ops_; }
  const CounterSnapshot& gradient_ops() const { return gradient_ops_; }

 private:
  struct StateEval {
    VectorField v;
    DeparturePoints forward;
    TimeSeries rho;
    ObjectiveValue value;
  };
  struct Linearization {
    VectorField v;
    DeparturePoints forward;
    DeparturePoints backward;
    ScalarField div_v;
    TimeSeries rho;
    TimeSeries lambda;
    std::vector<VectorField> grad_rho;
  };

  const StateEval& evaluate_state(const VectorField& v);
  VectorField time_integral(const TimeSeries& weight, const std::vector<VectorField>& grads) const;

  RegistrationProblem problem_;
  SolverConfig config_;
  OpCounters counters_;
  SpectralOps spectral_;
  Interpolator interp_;
  TransportSolver transport_;
  std::optional<StateEval> state_;
  std::optional<Linearization> lin_;
  std::uint64_t matvecs_ = 0;
  std::uint64_t gradient_evals_ = 0;
  CounterSnapshot matvec_transport_ops_;
  CounterSnapshot matvec_total_ops_;
  CounterSnapshot gradient_ops_;
};

using LinearOperator = std::function<VectorField(const VectorField&)>;

struct PcgResult {
  VectorField step;
  int iterations = 0;
  bool negative_curvature = false;
  bool converged = false;
};

/// Preconditioned CG on H s = -g. Stops when sqrt(<r, P r>) <= eta *
/// sqrt(<r0, P r0>) or after max_iter iterations. On non-positive curvature
/// it returns the current iterate, or -P g if no iteration completed.
PcgResult pcg(const LinearOperator& hessian, const LinearOperator& preconditioner,
              const VectorField& gradient, double eta, int max_iter);

/// Quadratic forcing term (min(0.5, ||g|| / ||g0||))^2.
double forcing_term(double grad_norm, double initial_grad_norm);

struct NewtonResult {
  VectorField velocity;
  SolverReport report;
};

/// Armijo-globalized inexact (Gauss-)Newton-Krylov solve starting from
/// `initial` (zero when absent).
NewtonResult newton_solve(const RegistrationProblem& problem, const SolverConfig& config,
                          const std::optional<VectorField>& initial = std::nullopt);

struct ContinuationResult {
  VectorField velocity;
  std::vector<SolverReport> reports;
  std::vector<double> accepted_betas;
  bool stopped_on_quality = false;
};

/// Solves for each beta of a strictly decreasing schedule, warm-starting from
/// the previous solution. Stops early (keeping the last accepted solution)
/// when the map's min det(grad y1) falls to config.min_det_bound or below.
ContinuationResult beta_continuation(const RegistrationProblem& problem,
                                     const std::vector<double>& schedule,
                                     const SolverConfig& config);

}  // namespace diffreg
