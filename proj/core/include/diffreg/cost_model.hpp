#pragma once

#include <cstdint>

#include "diffreg/optimizer.hpp"

namespace diffreg {

/// Parameters of the per-matvec complexity model. tau_lat is the message
/// latency in seconds, tau_ban the reciprocal bandwidth.
struct CostModel {
  double n = 0.0;  // grid points per axis
  double p = 1.0;  // tasks
  double n_t = 4.0;
  double tau_lat = 1e-6;
  double tau_ban = 1e-9;

  void validate() const;
};

struct CostPrediction {
  double t_flop = 0.0;           // floating point operations per Hessian matvec
  double t_mpi = 0.0;            // communication seconds per Hessian matvec
  double memory_per_task = 0.0;  // stored values per task
};

/// T_flop = n_t (8 * 7.5 N^3/p * log2 N + 4 * 600 N^3/p)
/// T_mpi  = 8 n_t (3 tau_lat sqrt(p) + tau_ban 3N^3/p) + 4 n_t (tau_lat + tau_ban N^2/p)
/// memory = 2 n_t N^3/p + 5 N^3/p
///
/// The interpolation constant 600 flops/point is used as printed even though
/// the per-point kernel estimate (10 x 64) is slightly larger.
CostPrediction predict(const CostModel& model);

struct MeasuredCounters {
  std::uint64_t matvecs = 0;
  std::uint64_t matvec_fft = 0;     // inside incremental transport solves
  std::uint64_t matvec_interp = 0;  // inside incremental transport solves
  std::uint64_t matvec_total_fft = 0;
  std::uint64_t gradient_evals = 0;
  std::uint64_t gradient_fft = 0;
  std::uint64_t gradient_interp = 0;
  std::uint64_t line_search_evals = 0;
  std::uint64_t departure_builds = 0;

  double fft_per_matvec() const;
  double interp_per_matvec() const;
  double total_fft_per_matvec() const;
  double fft_per_gradient() const;
};

MeasuredCounters measured_counters(const SolverReport& report);

/// True when the incremental solves used exactly 8 n_t FFTs and 4 n_t
/// interpolations per matvec. Only meaningful for the Gauss-Newton path.
bool matvec_accounting_holds(const MeasuredCounters& counts, int n_t);

/// Throws std::logic_error when a Gauss-Newton report violates the
/// per-matvec accounting. Full-Newton reports are not checked.
void assert_matvec_accounting(const SolverReport& report);

}  // namespace diffreg
