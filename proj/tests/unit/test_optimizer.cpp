#include <gtest/gtest.h>

#include <cmath>

#include "diffreg/errors.hpp"
#include "diffreg/optimizer.hpp"
#include "diffreg/problems.hpp"
#include "test_fields.hpp"

namespace diffreg {
namespace {

using testing::max_abs;
using testing::max_abs_diff;
using testing::random_bandlimited_vector;

constexpr double kVolume = kTwoPi * kTwoPi * kTwoPi;

SolverConfig config_with(double beta, int n_t = 4) {
  SolverConfig c;
  c.beta = beta;
  c.n_t = n_t;
  return c;
}

RegistrationProblem constant_problem(const Grid& g, double value = 0.5) {
  return make_problem(ScalarField(g, value), ScalarField(g, value), false);
}

VectorField sine_x1(const Grid& g) {
  VectorField v(g);
  v[0] = ScalarField::from_function(g, [](double x, double, double) { return std::sin(x); });
  return v;
}

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(SolverConfig{}.validate());
  SolverConfig c;
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.g_tol = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.max_newton = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.armijo.shrink = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_EQ(SolverConfig{}.max_krylov, 100);
  EXPECT_EQ(SolverConfig{}.max_newton, 50);
  EXPECT_EQ(SolverConfig{}.armijo.max_backtracks, 20);
}

TEST(Objective, IdenticalImagesZeroVelocity) {
  const Grid g(8);
  const auto rho = synthetic_template(g);
  ReducedSpaceProblem rsp(make_problem(rho, rho, false), config_with(1e-2));
  const auto J = rsp.objective(VectorField(g));
  EXPECT_EQ(J.total, 0.0);
  EXPECT_EQ(J.regularization, 0.0);
}

TEST(Objective, ZeroVelocityIsHalfSquaredDifference) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  ScalarField r(syn.problem.template_image);
  axpy(-1.0, syn.problem.reference, r);
  const auto J = rsp.objective(VectorField(g));
  EXPECT_EQ(J.regularization, 0.0);
  EXPECT_NEAR(J.misfit, 0.5 * inner_product(r, r), 1e-14 * J.misfit);
  EXPECT_EQ(J.total, J.misfit);
}

TEST(Objective, SingleModeSeminorm) {
  const Grid g(16);
  const double beta = 0.3;
  ReducedSpaceProblem rsp(constant_problem(g), config_with(beta));
  const auto J = rsp.objective(sine_x1(g));
  EXPECT_NEAR(J.misfit, 0.0, 1e-28);
  EXPECT_NEAR(J.total, 0.5 * beta * kVolume / 2.0, 1e-11);
}

TEST(Gradient, ZeroForIdenticalImages) {
  const Grid g(8);
  const auto rho = synthetic_template(g);
  ReducedSpaceProblem rsp(make_problem(rho, rho, false), config_with(1e-2));
  EXPECT_EQ(max_abs(rsp.gradient(VectorField(g))), 0.0);
}

TEST(Gradient, ZeroVelocityClosedForm) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  for (bool incompressible : {false, true}) {
    RegistrationProblem p = syn.problem;
    p.incompressible = incompressible;
    SolverConfig cfg = config_with(1e-2);
    cfg.incompressible = incompressible;
    ReducedSpaceProblem rsp(p, cfg);
    SpectralOps ops(g);
    const auto grad_t = ops.gradient(p.template_image);
    VectorField b(g);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < g.size(); ++i)
        b[c][i] = (p.reference[i] - p.template_image[i]) * grad_t[c][i];
    const VectorField expected = incompressible ? ops.leray_project(b) : b;
    EXPECT_LE(max_abs_diff(rsp.gradient(VectorField(g)), expected), 1e-12 * max_abs(expected));
  }
}

double fd_defect(int n, int n_t, double eps) {
  const Grid g(n);
  const auto syn = make_synthetic(g, false, n_t);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2, n_t));
  const auto v = random_bandlimited_vector(g, 101, 2, 6, 0.05);
  const auto vt = random_bandlimited_vector(g, 202, 2, 6, 0.1);
  const double dir = inner_product(rsp.gradient(v), vt);
  VectorField plus(v), minus(v);
  axpy(eps, vt, plus);
  axpy(-eps, vt, minus);
  const double fd = (rsp.objective(plus).total - rsp.objective(minus).total) / (2 * eps);
  return std::abs(dir - fd) / std::abs(fd);
}

TEST(Gradient, AgreesWithCentredFiniteDifference) {
  double best = 1.0;
  for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) best = std::min(best, fd_defect(16, 4, eps));
  EXPECT_LE(best, 1e-2);
}

TEST(Hessian, ZeroDirectionGivesZero) {
  const Grid g(8);
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  rsp.gradient(VectorField(g));
  EXPECT_EQ(max_abs(rsp.hessian_matvec(VectorField(g))), 0.0);
}

TEST(Hessian, RequiresGradientFirst) {
  const Grid g(8);
  ReducedSpaceProblem rsp(constant_problem(g), config_with(1e-2));
  EXPECT_THROW(rsp.hessian_matvec(VectorField(g)), std::logic_error);
}

TEST(Hessian, DecoupledRegularizationTerm) {
  const Grid g(16);
  const double beta = 0.2;
  ReducedSpaceProblem rsp(constant_problem(g), config_with(beta));
  rsp.gradient(VectorField(g));
  auto expected = sine_x1(g);
  scale(expected, beta);
  EXPECT_LE(max_abs_diff(rsp.hessian_matvec(sine_x1(g)), expected), 1e-13);
}

double symmetry_defect_at(int n, double amplitude) {
  const Grid g(n);
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  rsp.gradient(random_bandlimited_vector(g, 301, 2, 6, amplitude));
  const auto u = random_bandlimited_vector(g, 302, 3);
  const auto w = random_bandlimited_vector(g, 303, 3);
  const auto hu = rsp.hessian_matvec(u);
  const auto hw = rsp.hessian_matvec(w);
  return std::abs(inner_product(hu, w) - inner_product(u, hw)) / (norm(hu) * norm(w));
}

TEST(Hessian, GaussNewtonSymmetricAtZeroVelocity) {
  EXPECT_LE(symmetry_defect_at(16, 0.0), 1e-6);
}

// Away from v = 0 the semi-Lagrangian adjoint is not the exact transpose of the
// incremental state solve; the defect grows with |v| and shrinks under refinement.
TEST(Hessian, GaussNewtonSymmetryDefectShrinksUnderRefinement) {
  const double coarse = symmetry_defect_at(16, 0.1);
  const double fine = symmetry_defect_at(32, 0.1);
  EXPECT_LT(fine, 0.5 * coarse) << coarse << " " << fine;
  EXPECT_LT(symmetry_defect_at(16, 0.01), 0.2 * coarse);
}

TEST(Hessian, GaussNewtonPositiveOnProbes) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  rsp.gradient(random_bandlimited_vector(g, 301, 2, 6, 0.1));
  for (int k = 0; k < 20; ++k) {
    const auto p = random_bandlimited_vector(g, 400 + 3 * k, 4);
    EXPECT_GT(inner_product(p, rsp.hessian_matvec(p)), 0.0) << k;
  }
}

TEST(Hessian, GaussNewtonOperationCounts) {
  const Grid g(8);
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  VectorField v0(g);
  rsp.objective(v0);
  rsp.gradient(v0);
  const auto before = rsp.counters().snapshot();
  rsp.hessian_matvec(random_bandlimited_vector(g, 5));
  const auto d = rsp.counters().snapshot() - before;
  EXPECT_EQ(rsp.matvec_transport_ops().fft, 32u);
  EXPECT_EQ(rsp.matvec_transport_ops().interpolations, 16u);
  EXPECT_EQ(d.departure_builds, 0u);
  EXPECT_EQ(d.plan_builds, 0u);
  EXPECT_EQ(rsp.matvec_total_ops().fft, 32u + 9u);
  EXPECT_LT(rsp.gradient_ops().fft, rsp.matvec_transport_ops().fft);
}

TEST(Precondition, ExactForPureRegularization) {
  const Grid g(16);
  const double beta = 0.05;
  ReducedSpaceProblem rsp(constant_problem(g), config_with(beta));
  const auto r = random_bandlimited_vector(g, 7, 4);
  auto back = rsp.precondition(r);
  back = rsp.spectral().biharmonic(back);
  scale(back, beta);
  // Mean modes are not reproduced by beta*Delta^2, compare mean-free parts.
  for (int c = 0; c < 3; ++c) {
    const double m = r[c].sum() / g.size();
    for (std::size_t i = 0; i < g.size(); ++i) back[c][i] += m;
  }
  EXPECT_LE(max_abs_diff(back, r), 1e-12 * max_abs(r));
}

TEST(Pcg, ZeroGradientGivesZeroStep) {
  const Grid g(8);
  const LinearOperator id = [](const VectorField& x) { return x; };
  const auto res = pcg(id, id, VectorField(g), 0.1, 10);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(max_abs(res.step), 0.0);
  EXPECT_TRUE(res.converged);
}

TEST(Pcg, ExactPreconditionerConvergesInOneIteration) {
  const Grid g(16);
  const double beta = 0.1;
  ReducedSpaceProblem rsp(constant_problem(g), config_with(beta));
  rsp.gradient(VectorField(g));
  auto grad = random_bandlimited_vector(g, 8, 3);
  for (int c = 0; c < 3; ++c) {
    const double m = grad[c].sum() / g.size();
    for (double& x : grad[c].values()) x -= m;
  }
  const auto res = pcg([&](const VectorField& x) { return rsp.hessian_matvec(x); },
                       [&](const VectorField& x) { return rsp.precondition(x); }, grad, 1e-8, 10);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_TRUE(res.converged);
  auto check = rsp.hessian_matvec(res.step);
  axpy(1.0, grad, check);
  EXPECT_LE(max_abs(check), 1e-10 * max_abs(grad));
}

TEST(Pcg, NegativeCurvatureTruncates) {
  const Grid g(8);
  const LinearOperator neg = [](const VectorField& x) {
    VectorField y(x);
    scale(y, -1.0);
    return y;
  };
  const LinearOperator id = [](const VectorField& x) { return x; };
  const auto grad = random_bandlimited_vector(g, 9);
  const auto res = pcg(neg, id, grad, 0.1, 10);
  EXPECT_TRUE(res.negative_curvature);
  EXPECT_EQ(res.iterations, 0);
  VectorField minus_g(grad);
  scale(minus_g, -1.0);
  EXPECT_EQ(res.step, minus_g);
}

TEST(Pcg, SolvesSpdSystem) {
  const Grid g(8);
  // Diagonal SPD operator with a spread spectrum.
  ScalarField d(g);
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = 1.0 + static_cast<double>(i % 7);
  const LinearOperator h = [&](const VectorField& x) {
    VectorField y(x);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < g.size(); ++i) y[c][i] *= d[i];
    return y;
  };
  const LinearOperator id = [](const VectorField& x) { return x; };
  const auto grad = random_bandlimited_vector(g, 10);
  const auto res = pcg(h, id, grad, 1e-12, 50);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.iterations, 7);
  auto r = h(res.step);
  axpy(1.0, grad, r);
  EXPECT_LE(norm(r), 1e-10 * norm(grad));
}

TEST(ForcingTerm, Quadratic) {
  EXPECT_DOUBLE_EQ(forcing_term(1.0, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(forcing_term(0.1, 1.0), 0.1 * 0.1);
  EXPECT_DOUBLE_EQ(forcing_term(0.0, 1.0), 0.0);
}

TEST(NewtonSolve, IdenticalImagesConvergeImmediately) {
  const Grid g(8);
  const auto rho = synthetic_template(g);
  const auto res = newton_solve(make_problem(rho, rho, false), config_with(1e-2));
  EXPECT_TRUE(res.report.converged());
  EXPECT_EQ(res.report.newton_iterations(), 0);
  EXPECT_EQ(res.report.matvecs, 0u);
  EXPECT_EQ(max_abs(res.velocity), 0.0);
}

TEST(NewtonSolve, SyntheticSmallGrid) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  const auto res = newton_solve(syn.problem, config_with(1e-2));
  const auto& it = res.report.iterations;
  EXPECT_TRUE(res.report.converged());
  EXPECT_LE(it.back().rel_grad, 1e-2);
  EXPECT_LT(it.back().misfit, it.front().misfit);
  for (std::size_t k = 1; k < it.size(); ++k) {
    EXPECT_LT(it[k].objective, it[k - 1].objective);
    EXPECT_GE(it[k].cumulative_matvecs, it[k - 1].cumulative_matvecs);
  }
  std::uint64_t pcg_total = 0;
  for (const auto& r : it) pcg_total += r.pcg_iters;
  EXPECT_EQ(pcg_total, res.report.matvecs);
  EXPECT_EQ(it.back().cumulative_matvecs, res.report.matvecs);
  EXPECT_EQ(res.report.negative_curvature_events, 0u);
  // Departure points: one forward build per state evaluation, one backward
  // build per gradient, none inside matvecs.
  EXPECT_EQ(res.report.departure_builds,
            1 + res.report.gradient_evals + res.report.line_search_evals);
  EXPECT_EQ(res.report.matvec_transport_ops.departure_builds, 0u);
  EXPECT_EQ(res.report.matvec_transport_ops.fft, 32u * res.report.matvecs);
  EXPECT_EQ(res.report.matvec_transport_ops.interpolations, 16u * res.report.matvecs);
}

TEST(NewtonSolve, IncompressibleIteratesStayDivergenceFree) {
  const Grid g(16);
  const auto syn = make_synthetic(g, true, 4);
  SolverConfig cfg = config_with(1e-2);
  cfg.incompressible = true;
  const auto res = newton_solve(syn.problem, cfg);
  EXPECT_TRUE(res.report.converged());
  for (const auto& r : res.report.iterations) EXPECT_LE(r.rel_div, 1e-10) << r.iter;
}

TEST(NewtonSolve, FullNewtonModeConverges) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  SolverConfig cfg = config_with(1e-2);
  cfg.mode = HessianMode::FullNewton;
  const auto res = newton_solve(syn.problem, cfg);
  EXPECT_NE(res.report.termination, Termination::MaxIterations);
  EXPECT_LT(res.report.iterations.back().objective, res.report.iterations.front().objective);
}

TEST(NewtonSolve, MaxIterationsReported) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  SolverConfig cfg = config_with(1e-3);
  cfg.max_newton = 1;
  cfg.g_tol = 1e-6;
  const auto res = newton_solve(syn.problem, cfg);
  EXPECT_EQ(res.report.termination, Termination::MaxIterations);
  EXPECT_EQ(res.report.newton_iterations(), 1);
}

TEST(NewtonSolve, MatvecsGrowAsBetaShrinks) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  const auto hi = newton_solve(syn.problem, config_with(1e-1));
  const auto lo = newton_solve(syn.problem, config_with(1e-3));
  EXPECT_LT(hi.report.matvecs, lo.report.matvecs);
}

TEST(NewtonSolve, PartitionInvariant) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  SolverConfig cfg = config_with(1e-2);
  const auto a = newton_solve(syn.problem, cfg);
  cfg.tasks_p1 = 2;
  cfg.tasks_p2 = 2;
  const auto b = newton_solve(syn.problem, cfg);
  EXPECT_EQ(a.velocity, b.velocity);
}

TEST(BetaContinuation, SingleEntryMatchesNewtonSolve) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  const auto cold = newton_solve(syn.problem, config_with(1e-2));
  const auto cont = beta_continuation(syn.problem, {1e-2}, config_with(1e-2));
  EXPECT_EQ(cont.velocity, cold.velocity);
  ASSERT_EQ(cont.reports.size(), 1u);
  EXPECT_EQ(cont.reports[0].matvecs, cold.report.matvecs);
}

TEST(BetaContinuation, WarmStartReachesColdObjective) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  const auto cold = newton_solve(syn.problem, config_with(1e-2));
  const auto cont = beta_continuation(syn.problem, {1e-1, 1e-2}, config_with(1e-2));
  ASSERT_EQ(cont.accepted_betas.size(), 2u);
  EXPECT_FALSE(cont.stopped_on_quality);
  ReducedSpaceProblem rsp(syn.problem, config_with(1e-2));
  const double j_cont = rsp.objective(cont.velocity).total;
  const double j_cold = cold.report.iterations.back().objective;
  EXPECT_LE(j_cont, j_cold + 1e-2 * j_cold);
}

TEST(BetaContinuation, StopsWhenMapQualityBoundViolated) {
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  SolverConfig cfg = config_with(1e-1);
  cfg.min_det_bound = 0.99;  // any nontrivial map violates this
  const auto cont = beta_continuation(syn.problem, {1e-1, 1e-2}, cfg);
  EXPECT_TRUE(cont.stopped_on_quality);
  EXPECT_TRUE(cont.accepted_betas.empty());
  EXPECT_EQ(max_abs(cont.velocity), 0.0);
}

TEST(BetaContinuation, ScheduleValidation) {
  const Grid g(8);
  const auto p = constant_problem(g);
  EXPECT_THROW(beta_continuation(p, {}, SolverConfig{}), ParameterError);
  EXPECT_THROW(beta_continuation(p, {1e-2, 1e-1}, SolverConfig{}), ParameterError);
  EXPECT_THROW(beta_continuation(p, {1e-2, -1.0}, SolverConfig{}), ParameterError);
}

}  // namespace
}  // namespace diffreg
