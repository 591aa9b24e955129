#include "diffreg/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "diffreg/errors.hpp"

namespace diffreg {

void SolverConfig::validate() const {
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (n_t < 1) throw ParameterError("n_t must be >= 1");
  if (!(g_tol > 0.0 && g_tol < 1.0)) throw ParameterError("g_tol must lie in (0, 1)");
  if (max_newton < 1) throw ParameterError("max_newton must be >= 1");
  if (max_krylov < 1) throw ParameterError("max_krylov must be >= 1");
  if (!(armijo.c1 > 0.0 && armijo.c1 < 1.0)) throw ParameterError("Armijo c1 must lie in (0, 1)");
  if (!(armijo.shrink > 0.0 && armijo.shrink < 1.0)) {
    throw ParameterError("Armijo shrink factor must lie in (0, 1)");
  }
  if (armijo.max_backtracks < 1) throw ParameterError("Armijo backtrack cap must be >= 1");
  if (tasks_p1 < 1 || tasks_p2 < 1) throw ParameterError("task grid factors must be >= 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::MaxIterations:
      return "max_iterations";
    case Termination::LineSearchFailed:
      return "line_search_failed";
  }
  return "unknown";
}

ReducedSpaceProblem::ReducedSpaceProblem(const RegistrationProblem& problem,
                                         const SolverConfig& config)
    : problem_(problem),
      config_(config),
      spectral_(problem.grid(), &counters_),
      interp_(PencilPartition(problem.grid(), config.tasks_p1, config.tasks_p2), &counters_),
      transport_(spectral_, interp_, config.n_t) {
  config_.validate();
  require_same_grid(problem.reference.grid(), problem.template_image.grid(),
                    "registration problem");
}

const ReducedSpaceProblem::StateEval& ReducedSpaceProblem::evaluate_state(const VectorField& v) {
  require_same_grid(grid(), v.grid(), "objective");
  if (state_ && state_->v == v) return *state_;
  DeparturePoints forward = transport_.departure_points(v, Direction::Forward);
  TimeSeries rho = transport_.solve_state(forward, problem_.template_image);

  ObjectiveValue value;
  ScalarField residual(rho.back());
  axpy(-1.0, problem_.reference, residual);
  value.misfit = 0.5 * inner_product(residual, residual);
  value.regularization = 0.5 * config_.beta * inner_product(v, spectral_.biharmonic(v));
  value.total = value.misfit + value.regularization;
  state_.emplace(StateEval{v, std::move(forward), std::move(rho), value});
  return *state_;
}

ObjectiveValue ReducedSpaceProblem::objective(const VectorField& v) {
  return evaluate_state(v).value;
}

const ScalarField& ReducedSpaceProblem::deformed_template() const {
  if (!state_) throw std::logic_error("deformed_template: no objective evaluated yet");
  return state_->rho.back();
}

const TimeSeries& ReducedSpaceProblem::cached_state() const {
  if (!lin_) throw std::logic_error("cached_state: gradient() has not been called");
  return lin_->rho;
}

const TimeSeries& ReducedSpaceProblem::cached_adjoint() const {
  if (!lin_) throw std::logic_error("cached_adjoint: gradient() has not been called");
  return lin_->lambda;
}

VectorField ReducedSpaceProblem::project(const VectorField& v) {
  return config_.incompressible ? spectral_.leray_project(v) : v;
}

VectorField ReducedSpaceProblem::time_integral(const TimeSeries& weight,
                                               const std::vector<VectorField>& grads) const {
  // Trapezoidal rule over the stored slices.
  const int n_t = weight.n_t();
  const double dt = weight.dt();
  VectorField out(grid());
  for (int k = 0; k <= n_t; ++k) {
    const double w = (k == 0 || k == n_t) ? 0.5 * dt : dt;
    const ScalarField& s = weight[k];
    for (int c = 0; c < 3; ++c) {
      double* o = out[c].data();
      const double* gk = grads[k][c].data();
      for (std::size_t i = 0; i < s.size(); ++i) o[i] += w * s[i] * gk[i];
    }
  }
  return out;
}

VectorField ReducedSpaceProblem::gradient(const VectorField& v) {
  const CounterSnapshot before = counters_.snapshot();
  const StateEval& st = evaluate_state(v);

  ScalarField lambda_final(problem_.reference);
  axpy(-1.0, st.rho.back(), lambda_final);

  DeparturePoints backward = transport_.departure_points(v, Direction::Backward);
  const VectorSpectrum v_hat = spectral_.forward(v);
  ScalarField div_v = spectral_.divergence(v_hat);
  TimeSeries lambda = transport_.solve_adjoint(backward, div_v, lambda_final);

  std::vector<VectorField> grad_rho;
  grad_rho.reserve(st.rho.slices.size());
  for (const ScalarField& slice : st.rho.slices) grad_rho.push_back(spectral_.gradient(slice));

  VectorField g = spectral_.regularized_sum(v_hat, config_.beta, time_integral(lambda, grad_rho),
                                            config_.incompressible);

  lin_.emplace(Linearization{v, st.forward, std::move(backward), std::move(div_v), st.rho,
                             std::move(lambda), std::move(grad_rho)});
  ++gradient_evals_;
  gradient_ops_ += counters_.snapshot() - before;
  return g;
}

VectorField ReducedSpaceProblem::hessian_matvec(const VectorField& v_tilde) {
  if (!lin_) throw std::logic_error("hessian_matvec: gradient() must be evaluated first");
  require_same_grid(grid(), v_tilde.grid(), "hessian_matvec");
  const CounterSnapshot before = counters_.snapshot();

  const TimeSeries rho_tilde = transport_.solve_inc_state(lin_->forward, v_tilde, lin_->rho);
  const TimeSeries lambda_tilde =
      transport_.solve_inc_adjoint(lin_->backward, lin_->div_v, v_tilde, &lin_->lambda,
                                   rho_tilde.back(), config_.mode);
  const CounterSnapshot after_transport = counters_.snapshot();

  VectorField b_tilde = time_integral(lambda_tilde, lin_->grad_rho);
  if (config_.mode == HessianMode::FullNewton) {
    std::vector<VectorField> grad_rho_tilde;
    grad_rho_tilde.reserve(rho_tilde.slices.size());
    for (const ScalarField& s : rho_tilde.slices) grad_rho_tilde.push_back(spectral_.gradient(s));
    axpy(1.0, time_integral(lin_->lambda, grad_rho_tilde), b_tilde);
  }
  VectorField hv = spectral_.regularized_sum(spectral_.forward(v_tilde), config_.beta, b_tilde,
                                             config_.incompressible);

  ++matvecs_;
  matvec_transport_ops_ += after_transport - before;
  matvec_total_ops_ += counters_.snapshot() - before;
  return hv;
}

VectorField ReducedSpaceProblem::precondition(const VectorField& r) {
  return project(spectral_.inv_biharmonic(r, config_.beta));
}

PcgResult pcg(const LinearOperator& hessian, const LinearOperator& preconditioner,
              const VectorField& gradient, double eta, int max_iter) {
  const Grid& g = gradient.grid();
  PcgResult out{VectorField(g), 0, false, false};
  VectorField r(gradient);
  scale(r, -1.0);
  VectorField z = preconditioner(r);
  double rz = inner_product(r, z);
  const double rz0 = rz;
  if (!(rz0 > 0.0)) {
    out.converged = true;
    return out;
  }
  VectorField d(z);
  for (int k = 0; k < max_iter; ++k) {
    const VectorField hd = hessian(d);
    const double curvature = inner_product(d, hd);
    if (!(curvature > 0.0)) {
      out.negative_curvature = true;
      if (k == 0) out.step = z;
      return out;
    }
    const double alpha = rz / curvature;
    axpy(alpha, d, out.step);
    axpy(-alpha, hd, r);
    z = preconditioner(r);
    const double rz_new = inner_product(r, z);
    out.iterations = k + 1;
    if (std::sqrt(std::max(rz_new, 0.0)) <= eta * std::sqrt(rz0)) {
      out.converged = true;
      return out;
    }
    const double ratio = rz_new / rz;
    rz = rz_new;
    scale(d, ratio);
    axpy(1.0, z, d);
  }
  return out;
}

double forcing_term(double grad_norm, double initial_grad_norm) {
  const double rel = initial_grad_norm > 0.0 ? grad_norm / initial_grad_norm : 0.0;
  const double m = std::min(0.5, rel);
  return m * m;
}

NewtonResult newton_solve(const RegistrationProblem& problem, const SolverConfig& config,
                          const std::optional<VectorField>& initial) {
  const auto t_start = std::chrono::steady_clock::now();
  ReducedSpaceProblem rsp(problem, config);
  const Grid& grid = problem.grid();

  VectorField v = initial ? rsp.project(*initial) : VectorField(grid);
  SolverReport report;
  report.n_t = config.n_t;
  report.mode = config.mode;
  report.incompressible = config.incompressible;

  ObjectiveValue value = rsp.objective(v);
  VectorField g = rsp.gradient(v);
  const double g0 = norm(g);
  double gnorm = g0;

  auto rel_div = [&](const VectorField& u) {
    const double un = norm(u);
    return un > 0.0 ? norm(rsp.spectral().divergence(u)) / un : 0.0;
  };
  auto record = [&](int iter, int pcg_iters, double step) {
    report.iterations.push_back({iter, value.total, value.misfit, value.regularization,
                                 g0 > 0.0 ? gnorm / g0 : 0.0, pcg_iters, step, rsp.matvecs(),
                                 rel_div(v), config.beta});
  };
  record(0, 0, 0.0);

  int iter = 0;
  for (;;) {
    if (gnorm <= config.g_tol * g0 || gnorm == 0.0) {
      report.termination = Termination::Converged;
      break;
    }
    if (iter == config.max_newton) {
      report.termination = Termination::MaxIterations;
      break;
    }
    const double eta = forcing_term(gnorm, g0);
    PcgResult step = pcg([&](const VectorField& x) { return rsp.hessian_matvec(x); },
                         [&](const VectorField& x) { return rsp.precondition(x); },
                         rsp.project(g), eta, config.max_krylov);
    if (step.negative_curvature) ++report.negative_curvature_events;
    double slope = inner_product(g, step.step);
    if (!(slope < 0.0)) {
      // Not a descent direction; fall back to preconditioned steepest descent.
      VectorField pg = rsp.precondition(g);
      scale(pg, -1.0);
      step.step = std::move(pg);
      slope = inner_product(g, step.step);
    }

    double alpha = 1.0;
    bool accepted = false;
    VectorField trial(grid);
    ObjectiveValue trial_value;
    for (int bt = 0; bt < config.armijo.max_backtracks; ++bt) {
      trial = v;
      axpy(alpha, step.step, trial);
      trial_value = rsp.objective(trial);
      ++report.line_search_evals;
      if (trial_value.total <= value.total + config.armijo.c1 * alpha * slope &&
          trial_value.total < value.total) {
        accepted = true;
        break;
      }
      alpha *= config.armijo.shrink;
    }
    if (!accepted) {
      report.termination = Termination::LineSearchFailed;
      break;
    }
    v = std::move(trial);
    value = trial_value;
    g = rsp.gradient(v);
    gnorm = norm(g);
    ++iter;
    record(iter, step.iterations, alpha);
  }

  report.matvecs = rsp.matvecs();
  report.gradient_evals = rsp.gradient_evals();
  report.matvec_transport_ops = rsp.matvec_transport_ops();
  report.matvec_total_ops = rsp.matvec_total_ops();
  report.gradient_ops = rsp.gradient_ops();
  report.departure_builds = rsp.counters().snapshot().departure_builds;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return NewtonResult{std::move(v), std::move(report)};
}

ContinuationResult beta_continuation(const RegistrationProblem& problem,
                                     const std::vector<double>& schedule,
                                     const SolverConfig& config) {
  if (schedule.empty()) throw ParameterError("beta schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0)) throw ParameterError("beta schedule entries must be positive");
    if (i > 0 && !(schedule[i] < schedule[i - 1])) {
      throw ParameterError("beta schedule must be strictly decreasing");
    }
  }
  ContinuationResult out{VectorField(problem.grid()), {}, {}, false};
  std::optional<VectorField> warm;
  for (double beta : schedule) {
    SolverConfig cfg = config;
    cfg.beta = beta;
    NewtonResult res = newton_solve(problem, cfg, warm);

    SpectralOps spectral(problem.grid());
    const Interpolator interp(PencilPartition(problem.grid(), cfg.tasks_p1, cfg.tasks_p2));
    TransportSolver transport(spectral, interp, cfg.n_t);
    const ScalarField det =
        det_deformation_gradient(spectral, transport.deformation_map(res.velocity).displacement);
    out.reports.push_back(std::move(res.report));
    if (!(det.min() > config.min_det_bound)) {
      out.stopped_on_quality = true;
      break;
    }
    out.accepted_betas.push_back(beta);
    out.velocity = res.velocity;
    warm = std::move(res.velocity);
  }
  return out;
}

}  // namespace diffreg
