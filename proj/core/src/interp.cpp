#include "diffreg/interp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "diffreg/errors.hpp"

namespace diffreg {

namespace {

int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

void periodic_offsets(const Grid& g, const LocatedPoint& p, std::size_t o1[4], std::size_t o2[4],
                      std::size_t o3[4]) {
  const auto n1 = static_cast<std::size_t>(g.dim(0));
  const auto n12 = n1 * static_cast<std::size_t>(g.dim(1));
  for (int a = 0; a < 4; ++a) {
    o1[a] = static_cast<std::size_t>(wrap_index(p.cell[0] - 1 + a, g.dim(0)));
    o2[a] = n1 * static_cast<std::size_t>(wrap_index(p.cell[1] - 1 + a, g.dim(1)));
    o3[a] = n12 * static_cast<std::size_t>(wrap_index(p.cell[2] - 1 + a, g.dim(2)));
  }
}

double evaluate_periodic(const ScalarField& f, const LocatedPoint& p) {
  std::size_t o1[4], o2[4], o3[4];
  periodic_offsets(f.grid(), p, o1, o2, o3);
  return tricubic_stencil(f.data(), o1, o2, o3, p);
}

// One virtual task's view of the field: its slab plus ghost layers on the
// two partitioned axes. The third axis is whole and wraps locally.
struct TaskBlock {
  PencilPartition::Slab slab;
  int ghost = 0;
  std::array<int, 3> ext{};  // local extents including ghosts
  std::vector<double> data;

  std::size_t local_index(int l1, int l2, int l3) const {
    return static_cast<std::size_t>(l1) +
           static_cast<std::size_t>(ext[0]) *
               (static_cast<std::size_t>(l2) + static_cast<std::size_t>(ext[1]) * l3);
  }
};

}  // namespace

double wrap_coordinate(double x) {
  double y = x - kTwoPi * std::floor(x / kTwoPi);
  if (y >= kTwoPi || y < 0.0) y = 0.0;
  return y;
}

LocatedPoint locate(const Grid& grid, const Point3& p) {
  LocatedPoint out{};
  for (int axis = 0; axis < 3; ++axis) {
    const double x = p[axis];
    if (!std::isfinite(x)) {
      throw InputError("interpolation point has a non-finite coordinate");
    }
    const int n = grid.dim(axis);
    double s = x * (n / kTwoPi);
    s -= n * std::floor(s / n);
    const double r = std::nearbyint(s);
    if (std::abs(s - r) <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r)) {
      s = r;
    }
    int cell = static_cast<int>(std::floor(s));
    double frac = s - cell;
    if (cell >= n) {
      cell -= n;
    }
    if (cell < 0) {
      cell += n;
    }
    out.cell[axis] = cell;
    out.frac[axis] = frac;
  }
  return out;
}

std::vector<double> tricubic_local(const ScalarField& values, std::span<const Point3> points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = evaluate_periodic(values, locate(values.grid(), points[i]));
  }
  return out;
}

PencilPartition::PencilPartition(const Grid& grid, int p1, int p2, int ghost)
    : grid_(grid), p1_(p1), p2_(p2), ghost_(ghost) {
  if (p1 < 1 || p2 < 1 || grid.dim(0) % p1 != 0 || grid.dim(1) % p2 != 0) {
    throw ParameterError("pencil partition " + std::to_string(p1) + "x" + std::to_string(p2) +
                         " does not divide the grid");
  }
  if (ghost < 0) throw ParameterError("ghost width must be non-negative");
  w1_ = grid.dim(0) / p1;
  w2_ = grid.dim(1) / p2;
}

PencilPartition::Slab PencilPartition::slab(int task) const {
  const int t1 = task % p1_;
  const int t2 = task / p1_;
  return {{t1 * w1_, t2 * w2_, 0}, {(t1 + 1) * w1_, (t2 + 1) * w2_, grid_.dim(2)}};
}

std::size_t InterpolationPlan::remote_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < owner.size(); ++i) n += owner[i] != worker[i];
  return n;
}

InterpolationPlan build_plan(std::span<const Point3> points, const PencilPartition& partition) {
  const Grid& g = partition.grid();
  const int p = partition.tasks();
  InterpolationPlan plan{partition, {}, {}, {}, {}};
  plan.located.reserve(points.size());
  plan.worker.resize(points.size());
  plan.owner.resize(points.size());
  plan.routes.assign(p, std::vector<std::vector<std::size_t>>(p));

  const bool per_node = points.size() == g.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const LocatedPoint lp = locate(g, points[i]);
    plan.located.push_back(lp);
    if (per_node) {
      const auto node = g.unravel(i);
      plan.worker[i] = partition.owner(node[0], node[1]);
    } else {
      plan.worker[i] = static_cast<int>(i * static_cast<std::size_t>(p) / points.size());
    }
    plan.owner[i] = partition.owner(lp.cell[0], lp.cell[1]);
    plan.routes[plan.worker[i]][plan.owner[i]].push_back(i);
  }
  return plan;
}

std::vector<double> partitioned_interpolate(const InterpolationPlan& plan,
                                            const ScalarField& field) {
  const PencilPartition& part = plan.partition;
  const Grid& g = part.grid();
  require_same_grid(g, field.grid(), "partitioned_interpolate");
  const int p = part.tasks();
  const int gw = part.ghost();

  // Each task starts with only its own slab.
  std::vector<TaskBlock> blocks(p);
  for (int r = 0; r < p; ++r) {
    TaskBlock& b = blocks[r];
    b.slab = part.slab(r);
    b.ghost = gw;
    b.ext = {b.slab.hi[0] - b.slab.lo[0] + 2 * gw, b.slab.hi[1] - b.slab.lo[1] + 2 * gw, g.dim(2)};
    b.data.assign(static_cast<std::size_t>(b.ext[0]) * b.ext[1] * b.ext[2], 0.0);
    for (int i3 = 0; i3 < g.dim(2); ++i3) {
      for (int i2 = b.slab.lo[1]; i2 < b.slab.hi[1]; ++i2) {
        for (int i1 = b.slab.lo[0]; i1 < b.slab.hi[0]; ++i1) {
          b.data[b.local_index(i1 - b.slab.lo[0] + gw, i2 - b.slab.lo[1] + gw, i3)] =
              field.at(i1, i2, i3);
        }
      }
    }
  }

  // Phase 1: ghost exchange. For each receiving task, every ghost node is
  // requested from its owner; the owner packs values from its own slab into
  // the (src, dst) mailbox and the receiver unpacks in the same order.
  if (p > 1 || gw > 0) {
    for (int dst = 0; dst < p; ++dst) {
      TaskBlock& b = blocks[dst];
      std::vector<std::vector<std::array<int, 3>>> wanted(p);  // global node ids per source
      std::vector<std::vector<std::size_t>> slot(p);           // local destination per source
      for (int l2 = 0; l2 < b.ext[1]; ++l2) {
        for (int l1 = 0; l1 < b.ext[0]; ++l1) {
          const bool interior =
              l1 >= gw && l1 < b.ext[0] - gw && l2 >= gw && l2 < b.ext[1] - gw;
          if (interior) continue;
          const int i1 = wrap_index(b.slab.lo[0] + l1 - gw, g.dim(0));
          const int i2 = wrap_index(b.slab.lo[1] + l2 - gw, g.dim(1));
          const int src = part.owner(i1, i2);
          for (int i3 = 0; i3 < g.dim(2); ++i3) {
            wanted[src].push_back({i1, i2, i3});
            slot[src].push_back(b.local_index(l1, l2, i3));
          }
        }
      }
      for (int src = 0; src < p; ++src) {
        const TaskBlock& s = blocks[src];
        std::vector<double> mailbox;
        mailbox.reserve(wanted[src].size());
        for (const auto& n : wanted[src]) {
          mailbox.push_back(
              s.data[s.local_index(n[0] - s.slab.lo[0] + gw, n[1] - s.slab.lo[1] + gw, n[2])]);
        }
        for (std::size_t k = 0; k < mailbox.size(); ++k) b.data[slot[src][k]] = mailbox[k];
      }
    }
  }

  // Phases 2-4: owners receive requested points, evaluate, and send the
  // results back to the requesting workers.
  std::vector<double> out(plan.size(), 0.0);
  for (int owner = 0; owner < p; ++owner) {
    const TaskBlock& b = blocks[owner];
    const auto n12 = static_cast<std::size_t>(b.ext[0]) * static_cast<std::size_t>(b.ext[1]);
    for (int worker = 0; worker < p; ++worker) {
      const auto& ids = plan.routes[worker][owner];
      std::vector<double> reply;
      reply.reserve(ids.size());
      for (std::size_t id : ids) {
        const LocatedPoint& lp = plan.located[id];
        std::size_t o1[4], o2[4], o3[4];
        for (int a = 0; a < 4; ++a) {
          const int l1 = lp.cell[0] - 1 + a - b.slab.lo[0] + gw;
          const int l2 = lp.cell[1] - 1 + a - b.slab.lo[1] + gw;
          if (l1 < 0 || l1 >= b.ext[0] || l2 < 0 || l2 >= b.ext[1]) {
            throw PlanError("interpolation stencil exceeds the ghost layer of task " +
                            std::to_string(owner));
          }
          o1[a] = static_cast<std::size_t>(l1);
          o2[a] = static_cast<std::size_t>(b.ext[0]) * static_cast<std::size_t>(l2);
          o3[a] = n12 * static_cast<std::size_t>(wrap_index(lp.cell[2] - 1 + a, g.dim(2)));
        }
        reply.push_back(tricubic_stencil(b.data.data(), o1, o2, o3, lp));
      }
      for (std::size_t k = 0; k < ids.size(); ++k) out[ids[k]] = reply[k];
    }
  }
  return out;
}

Interpolator::Interpolator(const PencilPartition& partition, OpCounters* counters)
    : partition_(partition), counters_(counters) {}

InterpolationPlan Interpolator::plan(std::span<const Point3> points) const {
  if (counters_) counters_->add_plan_build();
  return build_plan(points, partition_);
}

std::vector<double> Interpolator::interpolate_points(const InterpolationPlan& plan,
                                                     const ScalarField& field) const {
  if (counters_) counters_->add_interpolations();
  if (partition_.tasks() > 1) return partitioned_interpolate(plan, field);
  require_same_grid(grid(), field.grid(), "interpolate");
  std::vector<double> out(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) out[i] = evaluate_periodic(field, plan.located[i]);
  return out;
}

ScalarField Interpolator::interpolate(const InterpolationPlan& plan,
                                      const ScalarField& field) const {
  if (plan.size() != grid().size()) {
    throw DimensionError("interpolate: plan does not have one point per grid node");
  }
  return ScalarField(grid(), interpolate_points(plan, field));
}

}  // namespace diffreg
