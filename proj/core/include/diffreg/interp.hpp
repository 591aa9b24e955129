#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "diffreg/counters.hpp"
#include "diffreg/grid.hpp"

namespace diffreg {

using Point3 = std::array<double, 3>;

/// Maps a coordinate into [0, 2*pi).
double wrap_coordinate(double x);

/// A point resolved to its containing cell and the fractional offset inside it.
struct LocatedPoint {
  std::array<int, 3> cell;
  std::array<double, 3> frac;
};

/// Resolves a position (wrapped periodically) to a cell of `grid`.
/// Coordinates within a few ulp of a node snap onto it. Throws InputError for
/// non-finite coordinates.
LocatedPoint locate(const Grid& grid, const Point3& p);

/// Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2 from the cell.
inline void cubic_weights(double t, double w[4]) {
  const double tp1 = t + 1.0;
  const double tm1 = t - 1.0;
  const double tm2 = t - 2.0;
  w[0] = -t * tm1 * tm2 / 6.0;
  w[1] = tp1 * tm1 * tm2 / 2.0;
  w[2] = -tp1 * t * tm2 / 2.0;
  w[3] = tp1 * t * tm1 / 6.0;
}

/// Tensor-product cubic evaluation on a 4x4x4 stencil addressed by
/// base[o1[a] + o2[b] + o3[c]]. The only interpolation arithmetic in the
/// library; both the serial and partitioned paths go through it.
inline double tricubic_stencil(const double* base, const std::size_t o1[4],
                               const std::size_t o2[4], const std::size_t o3[4],
                               const LocatedPoint& p) {
  double w1[4], w2[4], w3[4];
  cubic_weights(p.frac[0], w1);
  cubic_weights(p.frac[1], w2);
  cubic_weights(p.frac[2], w3);
  double result = 0.0;
  for (int c = 0; c < 4; ++c) {
    double plane = 0.0;
    for (int b = 0; b < 4; ++b) {
      const double* row = base + o2[b] + o3[c];
      const double line =
          w1[0] * row[o1[0]] + w1[1] * row[o1[1]] + w1[2] * row[o1[2]] + w1[3] * row[o1[3]];
      plane += w2[b] * line;
    }
    result += w3[c] * plane;
  }
  return result;
}

/// Tricubic Lagrange interpolation of a periodic field at arbitrary points.
std::vector<double> tricubic_local(const ScalarField& values, std::span<const Point3> points);

/// Virtual p1 x p2 pencil decomposition: task (t1, t2) owns
/// [t1*N1/p1, (t1+1)*N1/p1) x [t2*N2/p2, (t2+1)*N2/p2) x [0, N3).
class PencilPartition {
 public:
  struct Slab {
    std::array<int, 3> lo;
    std::array<int, 3> hi;  // exclusive
  };

  PencilPartition(const Grid& grid, int p1, int p2, int ghost = 3);

  const Grid& grid() const { return grid_; }
  int p1() const { return p1_; }
  int p2() const { return p2_; }
  int tasks() const { return p1_ * p2_; }
  int ghost() const { return ghost_; }

  Slab slab(int task) const;
  /// Task owning the cell/node with indices (i1, i2) on the partitioned axes.
  int owner(int i1, int i2) const { return i1 / w1_ + p1_ * (i2 / w2_); }

  friend bool operator==(const PencilPartition&, const PencilPartition&) = default;

 private:
  Grid grid_;
  int p1_, p2_, ghost_;
  int w1_, w2_;
};

/// Owner/worker routing for one point set. Point i is requested by
/// worker[i] and interpolated by owner[i] (the task whose slab contains
/// the point's cell).
struct InterpolationPlan {
  PencilPartition partition;
  std::vector<LocatedPoint> located;
  std::vector<int> worker;
  std::vector<int> owner;
  /// routes[w][o]: ids of points worker w sends to owner o, in input order.
  std::vector<std::vector<std::vector<std::size_t>>> routes;

  std::size_t size() const { return located.size(); }
  std::size_t remote_count() const;
};

/// Classifies points and builds per-pair send lists. When the point set has
/// one point per grid node, the worker of point i is the owner of node i;
/// otherwise points are dealt to workers in contiguous blocks.
InterpolationPlan build_plan(std::span<const Point3> points, const PencilPartition& partition);

/// Runs the four phases on virtual tasks with explicit mailbox buffers:
/// ghost synchronization, scatter of requested points to owners, local
/// tricubic evaluation, and return of results to workers. Results come back
/// in input order and match tricubic_local bitwise.
/// Throws PlanError when a stencil reaches beyond an owner's ghost layer.
std::vector<double> partitioned_interpolate(const InterpolationPlan& plan,
                                            const ScalarField& field);

/// Interpolation front end used by the transport solvers. With a 1x1
/// partition it evaluates directly on the global field; otherwise it runs
/// the partitioned harness. Both produce identical bits.
class Interpolator {
 public:
  explicit Interpolator(const PencilPartition& partition, OpCounters* counters = nullptr);

  const PencilPartition& partition() const { return partition_; }
  const Grid& grid() const { return partition_.grid(); }
  OpCounters* counters() const { return counters_; }

  InterpolationPlan plan(std::span<const Point3> points) const;
  /// Interpolates a field at a plan with one point per grid node.
  ScalarField interpolate(const InterpolationPlan& plan, const ScalarField& field) const;
  std::vector<double> interpolate_points(const InterpolationPlan& plan,
                                         const ScalarField& field) const;

 private:
  PencilPartition partition_;
  OpCounters* counters_;
};

}  // namespace diffreg
