#include "diffreg/cost_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "diffreg/errors.hpp"

namespace diffreg {

void CostModel::validate() const {
  if (!(n > 0.0 && p > 0.0 && n_t > 0.0 && tau_lat > 0.0 && tau_ban > 0.0)) {
    throw ParameterError("cost model parameters must be positive");
  }
}

CostPrediction predict(const CostModel& m) {
  m.validate();
  const double n3_p = m.n * m.n * m.n / m.p;
  CostPrediction out;
  out.t_flop = m.n_t * (8.0 * 7.5 * n3_p * std::log2(m.n) + 4.0 * 600.0 * n3_p);
  out.t_mpi = 8.0 * m.n_t * (3.0 * m.tau_lat * std::sqrt(m.p) + m.tau_ban * 3.0 * n3_p) +
              4.0 * m.n_t * (m.tau_lat + m.tau_ban * m.n * m.n / m.p);
  out.memory_per_task = 2.0 * m.n_t * n3_p + 5.0 * n3_p;
  return out;
}

namespace {
double per(std::uint64_t a, std::uint64_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}
}  // namespace

double MeasuredCounters::fft_per_matvec() const { return per(matvec_fft, matvecs); }
double MeasuredCounters::interp_per_matvec() const { return per(matvec_interp, matvecs); }
double MeasuredCounters::total_fft_per_matvec() const { return per(matvec_total_fft, matvecs); }
double MeasuredCounters::fft_per_gradient() const { return per(gradient_fft, gradient_evals); }

MeasuredCounters measured_counters(const SolverReport& report) {
  MeasuredCounters c;
  c.matvecs = report.matvecs;
  c.matvec_fft = report.matvec_transport_ops.fft;
  c.matvec_interp = report.matvec_transport_ops.interpolations;
  c.matvec_total_fft = report.matvec_total_ops.fft;
  c.gradient_evals = report.gradient_evals;
  c.gradient_fft = report.gradient_ops.fft;
  c.gradient_interp = report.gradient_ops.interpolations;
  c.line_search_evals = report.line_search_evals;
  c.departure_builds = report.departure_builds;
  return c;
}

bool matvec_accounting_holds(const MeasuredCounters& counts, int n_t) {
  const auto nt = static_cast<std::uint64_t>(n_t);
  return counts.matvec_fft == 8 * nt * counts.matvecs &&
         counts.matvec_interp == 4 * nt * counts.matvecs;
}

void assert_matvec_accounting(const SolverReport& report) {
  if (report.mode != HessianMode::GaussNewton) return;
  const MeasuredCounters c = measured_counters(report);
  if (!matvec_accounting_holds(c, report.n_t)) {
    throw std::logic_error("matvec accounting mismatch: " + std::to_string(c.matvec_fft) +
                           " FFTs and " + std::to_string(c.matvec_interp) +
                           " interpolations over " + std::to_string(c.matvecs) + " matvecs");
  }
}

}  // namespace diffreg
