#pragma once

#include <atomic>
#include <cstdint>

namespace diffreg {

/// Plain copy of the operation counters at one instant.
struct CounterSnapshot {
  std::uint64_t fft = 0;             // 3-D scalar transforms, forward or inverse
  std::uint64_t interpolations = 0;  // scalar fields interpolated at a point set
  std::uint64_t plan_builds = 0;
  std::uint64_t departure_builds = 0;

  friend CounterSnapshot operator-(const CounterSnapshot& a, const CounterSnapshot& b) {
    return {a.fft - b.fft, a.interpolations - b.interpolations, a.plan_builds - b.plan_builds,
            a.departure_builds - b.departure_builds};
  }
  CounterSnapshot& operator+=(const CounterSnapshot& o) {
    fft += o.fft;
    interpolations += o.interpolations;
    plan_builds += o.plan_builds;
    departure_builds += o.departure_builds;
    return *this;
  }
  friend bool operator==(const CounterSnapshot&, const CounterSnapshot&) = default;
};

/// Monotonic counters of logical operator applications. Safe to increment
/// from concurrent workers.
class OpCounters {
 public:
  void add_fft(std::uint64_t n = 1) { fft_.fetch_add(n, std::memory_order_relaxed); }
  void add_interpolations(std::uint64_t n = 1) {
    interp_.fetch_add(n, std::memory_order_relaxed);
  }
  void add_plan_build() { plans_.fetch_add(1, std::memory_order_relaxed); }
  void add_departure_build() { departures_.fetch_add(1, std::memory_order_relaxed); }

  CounterSnapshot snapshot() const {
    return {fft_.load(std::memory_order_relaxed), interp_.load(std::memory_order_relaxed),
            plans_.load(std::memory_order_relaxed), departures_.load(std::memory_order_relaxed)};
  }
  void reset() {
    fft_ = 0;
    interp_ = 0;
    plans_ = 0;
    departures_ = 0;
  }

 private:
  std::atomic<std::uint64_t> fft_{0};
  std::atomic<std::uint64_t> interp_{0};
  std::atomic<std::uint64_t> plans_{0};
  std::atomic<std::uint64_t> departures_{0};
};

}  // namespace diffreg
