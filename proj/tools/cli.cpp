#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "diffreg/cost_model.hpp"
#include "diffreg/errors.hpp"
#include "diffreg/optimizer.hpp"
#include "diffreg/problems.hpp"
#include "diffreg/volume_file.hpp"

namespace diffreg::cli {

namespace {

struct Options {
  bool synthetic = false;
  std::string template_path;
  std::string reference_path;
  int n = 64;
  std::vector<int> dims;
  std::vector<int> pad;
  double beta = 1e-2;
  std::vector<double> beta_schedule;
  int nt = 4;
  double gtol = 1e-2;
  int max_newton = 50;
  int max_krylov = 100;
  bool incompressible = false;
  std::string mode = "gauss-newton";
  std::string tasks = "1x1";
  std::string out_dir = "diffreg_out";
  std::uint64_t seed = 0;
  double det_bound = 0.0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::pair<int, int> parse_tasks(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw InputError("--tasks expects P1xP2, got '" + s + "'");
  try {
    std::size_t used1 = 0, used2 = 0;
    const int p1 = std::stoi(s.substr(0, x), &used1);
    const int p2 = std::stoi(s.substr(x + 1), &used2);
    if (used1 != x || used2 != s.size() - x - 1 || p1 < 1 || p2 < 1) throw std::invalid_argument(s);
    return {p1, p2};
  } catch (const std::logic_error&) {
    throw InputError("--tasks expects P1xP2 with positive integers, got '" + s + "'");
  }
}

RegistrationProblem load_problem(const Options& o, int p1, int p2, std::array<int, 3>& pad_used) {
  if (o.synthetic) {
    pad_used = {0, 0, 0};
    const Grid grid = o.dims.empty() ? Grid(o.n) : Grid(o.dims[0], o.dims[1], o.dims[2]);
    return make_synthetic(grid, o.incompressible, o.nt, PencilPartition(grid, p1, p2)).problem;
  }
  const ScalarField tmpl = to_scalar_field(read_volume(o.template_path));
  const ScalarField ref = to_scalar_field(read_volume(o.reference_path));
  if (!(tmpl.grid() == ref.grid())) {
    throw InputError("template and reference volumes have different dimensions");
  }
  PreprocessOptions pp;
  if (!o.pad.empty()) pp.pad = std::array<int, 3>{o.pad[0], o.pad[1], o.pad[2]};
  pad_used = pp.pad.value_or(default_padding(tmpl.grid().dims()));
  RegistrationProblem problem =
      make_problem(preprocess(ref, pp), preprocess(tmpl, pp), o.incompressible,
                   "template=" + o.template_path + " reference=" + o.reference_path);
  problem.preprocessed = true;
  return problem;
}

void write_log(const std::filesystem::path& path, const std::vector<SolverReport>& reports) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot write " + path.string());
  os << "iter,J,misfit,reg,rel_grad,pcg_iters,step_length,cum_matvecs,rel_div,beta\n";
  int offset = 0;
  std::uint64_t matvec_offset = 0;
  for (const SolverReport& r : reports) {
    for (const IterationRecord& it : r.iterations) {
      if (offset > 0 && it.iter == 0) continue;  // warm start repeats the previous iterate
      os << offset + it.iter << ',' << fmt(it.objective) << ',' << fmt(it.misfit) << ','
         << fmt(it.regularization) << ',' << fmt(it.rel_grad) << ',' << it.pcg_iters << ','
         << fmt(it.step_length) << ',' << matvec_offset + it.cumulative_matvecs << ','
         << fmt(it.rel_div) << ',' << fmt(it.beta) << '\n';
    }
    offset += r.newton_iterations();
    matvec_offset += r.matvecs;
  }
}

int execute(const Options& o, std::ostream& out) {
  const auto [p1, p2] = parse_tasks(o.tasks);
  if (!o.synthetic && (o.template_path.empty() || o.reference_path.empty())) {
    throw InputError("either --synthetic or both --template and --reference are required");
  }

  SolverConfig config;
  config.beta = o.beta_schedule.empty() ? o.beta : o.beta_schedule.back();
  config.n_t = o.nt;
  config.g_tol = o.gtol;
  config.max_newton = o.max_newton;
  config.max_krylov = o.max_krylov;
  config.incompressible = o.incompressible;
  config.mode = o.mode == "full-newton" ? HessianMode::FullNewton : HessianMode::GaussNewton;
  config.tasks_p1 = p1;
  config.tasks_p2 = p2;
  config.min_det_bound = o.det_bound;
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw InputError(e.what());
  }

  std::array<int, 3> pad{};
  const RegistrationProblem problem = [&] {
    try {
      RegistrationProblem p = load_problem(o, p1, p2, pad);
      PencilPartition(p.grid(), p1, p2);  // partition must divide the solver grid
      return p;
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }();
  const Grid& grid = problem.grid();

  out << "diffreg: " << (o.synthetic ? "synthetic" : "file") << " problem on " << grid.dim(0)
      << "x" << grid.dim(1) << "x" << grid.dim(2) << "\n"
      << "  n_t=" << config.n_t << " beta=" << config.beta << " g_tol=" << config.g_tol
      << " max_newton=" << config.max_newton << " max_krylov=" << config.max_krylov
      << " mode=" << o.mode << " incompressible=" << (o.incompressible ? 1 : 0)
      << " tasks=" << p1 << "x" << p2 << "\n";

  std::vector<SolverReport> reports;
  VectorField v(grid);
  bool converged = false;
  if (!o.beta_schedule.empty()) {
    ContinuationResult res = beta_continuation(problem, o.beta_schedule, config);
    v = std::move(res.velocity);
    reports = std::move(res.reports);
    converged = !res.stopped_on_quality && reports.back().converged();
  } else {
    NewtonResult res = newton_solve(problem, config);
    v = std::move(res.velocity);
    converged = res.report.converged();
    reports.push_back(std::move(res.report));
  }

  SpectralOps spectral(grid);
  const Interpolator interp(PencilPartition(grid, p1, p2));
  TransportSolver transport(spectral, interp, config.n_t);
  const DeparturePoints forward = transport.departure_points(v, Direction::Forward);
  const ScalarField rho1 = transport.solve_state(forward, problem.template_image).back();
  const DeformationMap map = transport.deformation_map(forward, v);
  const ScalarField det = det_deformation_gradient(spectral, map.displacement);
  const QualityMetrics q = quality_metrics(spectral, problem, v, map, rho1);
  ScalarField residual(grid);
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = std::abs(problem.reference[i] - rho1[i]);
  }

  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  write_volume(dir / "velocity.dvf", to_volume(v));
  write_volume(dir / "deformed_template.dvf", to_volume(rho1));
  write_volume(dir / "residual.dvf", to_volume(residual));
  write_volume(dir / "det_grad.dvf", to_volume(det));
  write_log(dir / "convergence.csv", reports);

  const SolverReport& last = reports.back();
  const double n_equiv = std::cbrt(static_cast<double>(grid.size()));
  const CostPrediction pred = predict(CostModel{n_equiv, static_cast<double>(p1 * p2),
                                                static_cast<double>(config.n_t), 1e-6, 1e-9});
  MeasuredCounters measured;
  for (const SolverReport& r : reports) {
    const MeasuredCounters m = measured_counters(r);
    measured.matvecs += m.matvecs;
    measured.matvec_fft += m.matvec_fft;
    measured.matvec_interp += m.matvec_interp;
    measured.matvec_total_fft += m.matvec_total_fft;
    measured.gradient_evals += m.gradient_evals;
    measured.gradient_fft += m.gradient_fft;
    measured.gradient_interp += m.gradient_interp;
    measured.line_search_evals += m.line_search_evals;
    measured.departure_builds += m.departure_builds;
  }
  {
    std::ofstream os(dir / "cost_model.txt", std::ios::trunc);
    os << "# predicted per Hessian matvec (tau_lat=1e-6 s, tau_ban=1e-9 s/value)\n"
       << "N=" << fmt(n_equiv) << "\np=" << p1 * p2 << "\nn_t=" << config.n_t
       << "\nt_flop=" << fmt(pred.t_flop) << "\nt_mpi=" << fmt(pred.t_mpi)
       << "\nmemory_per_task=" << fmt(pred.memory_per_task) << "\n"
       << "# measured\n"
       << "matvecs=" << measured.matvecs << "\nmatvec_fft=" << measured.matvec_fft
       << "\nmatvec_interp=" << measured.matvec_interp
       << "\nfft_per_matvec=" << fmt(measured.fft_per_matvec())
       << "\ninterp_per_matvec=" << fmt(measured.interp_per_matvec())
       << "\nexpected_fft_per_matvec=" << 8 * config.n_t
       << "\nexpected_interp_per_matvec=" << 4 * config.n_t
       << "\naccounting_holds="
       << (config.mode == HessianMode::GaussNewton
               ? (matvec_accounting_holds(measured, config.n_t) ? "true" : "false")
               : "n/a")
       << "\ngradient_evals=" << measured.gradient_evals
       << "\ngradient_fft=" << measured.gradient_fft
       << "\nline_search_evals=" << measured.line_search_evals
       << "\ndeparture_builds=" << measured.departure_builds << "\n";
  }
  {
    std::ofstream os(dir / "run.meta", std::ios::trunc);
    os << "source=" << (o.synthetic ? "synthetic" : "file") << "\n"
       << "provenance=" << problem.provenance << "\n"
       << "dims=" << grid.dim(0) << "," << grid.dim(1) << "," << grid.dim(2) << "\n"
       << "pad=" << pad[0] << "," << pad[1] << "," << pad[2] << "\n"
       << "nt=" << config.n_t << "\nbeta=" << fmt(config.beta) << "\ngtol=" << fmt(config.g_tol)
       << "\nmax_newton=" << config.max_newton << "\nmax_krylov=" << config.max_krylov
       << "\nmode=" << o.mode << "\nincompressible=" << (o.incompressible ? 1 : 0)
       << "\ntasks=" << p1 << "x" << p2 << "\nseed=" << o.seed
       << "\ntermination=" << to_string(last.termination)
       << "\nnewton_iterations=" << last.newton_iterations()
       << "\nrelative_misfit=" << fmt(q.relative_misfit) << "\ndet_min=" << fmt(q.det_min)
       << "\ndet_max=" << fmt(q.det_max) << "\ndet_mean=" << fmt(q.det_mean)
       << "\nmax_det_deviation=" << fmt(q.max_det_deviation)
       << "\ndiv_relative=" << fmt(q.div_relative)
       << "\ndiffeomorphic=" << (q.diffeomorphic ? 1 : 0) << "\n";
  }

  out << "  termination=" << to_string(last.termination)
      << " newton_iterations=" << last.newton_iterations() << " matvecs=" << measured.matvecs
      << "\n  relative_misfit=" << q.relative_misfit << " det_min=" << q.det_min
      << " det_max=" << q.det_max << " div_relative=" << q.div_relative << "\n";
  double wall = 0.0;
  for (const SolverReport& r : reports) wall += r.wall_seconds;
  out << "  wall_seconds=" << wall << "\n";
  return converged ? kConverged : kNotConverged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Diffeomorphic image registration with a Gauss-Newton-Krylov solver", "diffreg"};
  auto* synth = app.add_flag("--synthetic", o.synthetic, "Register the built-in synthetic problem");
  auto* tmpl = app.add_option("--template", o.template_path, "Template volume (DVF1)");
  auto* ref = app.add_option("--reference", o.reference_path, "Reference volume (DVF1)");
  synth->excludes(tmpl)->excludes(ref);
  tmpl->needs(ref);
  ref->needs(tmpl);
  auto* n_opt = app.add_option("--n", o.n, "Grid points per axis (synthetic)");
  auto* dims_opt = app.add_option("--dims", o.dims, "Grid dimensions N1 N2 N3 (synthetic)")
                       ->expected(3);
  n_opt->excludes(dims_opt);
  app.add_option("--pad", o.pad, "Zero padding per side, three values (file input)")
      ->expected(3);
  auto* beta_opt = app.add_option("--beta", o.beta, "Regularization weight");
  auto* sched_opt = app.add_option("--beta-schedule", o.beta_schedule,
                                   "Strictly decreasing continuation schedule")
                        ->delimiter(',');
  beta_opt->excludes(sched_opt);
  app.add_option("--nt", o.nt, "Number of time steps")->capture_default_str();
  app.add_option("--gtol", o.gtol, "Relative gradient tolerance")->capture_default_str();
  app.add_option("--max-newton", o.max_newton, "Newton iteration cap")->capture_default_str();
  app.add_option("--max-krylov", o.max_krylov, "PCG iteration cap per solve")
      ->capture_default_str();
  app.add_flag("--incompressible", o.incompressible, "Restrict to divergence-free velocities");
  app.add_option("--mode", o.mode, "Hessian: gauss-newton or full-newton")
      ->check(CLI::IsMember({"gauss-newton", "full-newton"}))
      ->capture_default_str();
  app.add_option("--tasks", o.tasks, "Virtual pencil partition P1xP2 for interpolation")
      ->capture_default_str();
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed recorded with the run");
  app.add_option("--det-bound", o.det_bound,
                 "Continuation stops when min det(grad y1) falls to this value")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "diffreg: " << e.what() << "\n" << app.help();
    return kInputError;
  }

  try {
    return execute(o, out);
  } catch (const InputError& e) {
    err << "diffreg: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "diffreg: " << e.what() << "\n";
    return kInputError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace diffreg::cli
