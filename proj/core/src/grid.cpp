#include "diffreg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffreg/errors.hpp"

namespace diffreg {

Grid::Grid(int n1, int n2, int n3) : dims_{n1, n2, n3} {
  for (int n : dims_) {
    if (n < 4 || n % 2 != 0) {
      throw DimensionError("grid dimensions must be even and >= 4, got " + std::to_string(n));
    }
  }
}

std::array<int, 3> Grid::unravel(std::size_t idx) const {
  const auto n1 = static_cast<std::size_t>(dims_[0]);
  const auto n2 = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(idx % n1), static_cast<int>((idx / n1) % n2),
          static_cast<int>(idx / (n1 * n2))};
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    throw DimensionError(std::string(what) + ": grid mismatch");
  }
}

ScalarField::ScalarField(const Grid& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw DimensionError("scalar field: value count does not match grid size");
  }
}

ScalarField ScalarField::from_function(const Grid& grid,
                                       const std::function<double(double, double, double)>& f) {
  ScalarField out(grid);
  for (int i3 = 0; i3 < grid.dim(2); ++i3) {
    const double x3 = grid.coord(2, i3);
    for (int i2 = 0; i2 < grid.dim(1); ++i2) {
      const double x2 = grid.coord(1, i2);
      for (int i1 = 0; i1 < grid.dim(0); ++i1) {
        out.at(i1, i2, i3) = f(grid.coord(0, i1), x2, x3);
      }
    }
  }
  return out;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(const Grid& grid, double fill)
    : comps_{ScalarField(grid, fill), ScalarField(grid, fill), ScalarField(grid, fill)} {}

VectorField::VectorField(ScalarField c1, ScalarField c2, ScalarField c3)
    : comps_{std::move(c1), std::move(c2), std::move(c3)} {
  require_same_grid(comps_[0].grid(), comps_[1].grid(), "vector field");
  require_same_grid(comps_[0].grid(), comps_[2].grid(), "vector field");
}

VectorField VectorField::from_function(
    const Grid& grid, const std::function<std::array<double, 3>(double, double, double)>& f) {
  VectorField out(grid);
  for (int i3 = 0; i3 < grid.dim(2); ++i3) {
    for (int i2 = 0; i2 < grid.dim(1); ++i2) {
      for (int i1 = 0; i1 < grid.dim(0); ++i1) {
        const auto v = f(grid.coord(0, i1), grid.coord(1, i2), grid.coord(2, i3));
        const std::size_t idx = grid.index(i1, i2, i3);
        for (int c = 0; c < 3; ++c) out[c][idx] = v[c];
      }
    }
  }
  return out;
}

bool VectorField::all_finite() const {
  return comps_[0].all_finite() && comps_[1].all_finite() && comps_[2].all_finite();
}

double inner_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_product");
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += pa[i] * pb[i];
  return a.grid().cell_volume() * s;
}

double inner_product(const VectorField& a, const VectorField& b) {
  return inner_product(a[0], b[0]) + inner_product(a[1], b[1]) + inner_product(a[2], b[2]);
}

double norm(const ScalarField& a) { return std::sqrt(inner_product(a, a)); }
double norm(const VectorField& a) { return std::sqrt(inner_product(a, a)); }

void axpy(double alpha, const ScalarField& x, ScalarField& y) {
  require_same_grid(x.grid(), y.grid(), "axpy");
  const double* px = x.data();
  double* py = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) py[i] += alpha * px[i];
}

void axpy(double alpha, const VectorField& x, VectorField& y) {
  for (int c = 0; c < 3; ++c) axpy(alpha, x[c], y[c]);
}

void scale(ScalarField& f, double alpha) {
  for (double& v : f.values()) v *= alpha;
}

void scale(VectorField& f, double alpha) {
  for (int c = 0; c < 3; ++c) scale(f[c], alpha);
}

}  // namespace diffreg
