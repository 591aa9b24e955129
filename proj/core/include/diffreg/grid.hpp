#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace diffreg {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Periodic Cartesian grid on [0, 2*pi)^3.
///
/// Points are x_i = 2*pi*i/N per axis. Linear ordering is x-fastest:
/// index = i1 + N1 * (i2 + N2 * i3). Every axis needs at least four points
/// (tricubic stencil) and an even count (well-defined Nyquist mode).
class Grid {
 public:
  Grid(int n1, int n2, int n3);
  explicit Grid(int n) : Grid(n, n, n) {}

  const std::array<int, 3>& dims() const { return dims_; }
  int dim(int axis) const { return dims_[axis]; }
  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  double spacing(int axis) const { return kTwoPi / dims_[axis]; }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  double coord(int axis, int i) const { return kTwoPi * i / dims_[axis]; }

  std::size_t index(int i1, int i2, int i3) const {
    return static_cast<std::size_t>(i1) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(i2) + static_cast<std::size_t>(dims_[1]) * i3);
  }
  std::array<int, 3> unravel(std::size_t idx) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::array<int, 3> dims_;
};

class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, double fill = 0.0);
  ScalarField(const Grid& grid, std::vector<double> values);

  /// Samples f(x1, x2, x3) at every grid point.
  static ScalarField from_function(const Grid& grid,
                                   const std::function<double(double, double, double)>& f);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(int i1, int i2, int i3) { return values_[grid_.index(i1, i2, i3)]; }
  double at(int i1, int i2, int i3) const { return values_[grid_.index(i1, i2, i3)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double min() const;
  double max() const;
  double sum() const;
  bool all_finite() const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Three scalar components on one grid.
class VectorField {
 public:
  explicit VectorField(const Grid& grid, double fill = 0.0);
  VectorField(ScalarField c1, ScalarField c2, ScalarField c3);

  static VectorField from_function(
      const Grid& grid, const std::function<std::array<double, 3>(double, double, double)>& f);

  const Grid& grid() const { return comps_[0].grid(); }
  ScalarField& operator[](int c) { return comps_[c]; }
  const ScalarField& operator[](int c) const { return comps_[c]; }

  bool all_finite() const;

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  std::array<ScalarField, 3> comps_;
};

/// n_t + 1 stored slices of a scalar field on a uniform time grid over [0, 1].
struct TimeSeries {
  std::vector<ScalarField> slices;

  int n_t() const { return static_cast<int>(slices.size()) - 1; }
  double dt() const { return 1.0 / n_t(); }
  ScalarField& operator[](int k) { return slices[k]; }
  const ScalarField& operator[](int k) const { return slices[k]; }
  const ScalarField& front() const { return slices.front(); }
  const ScalarField& back() const { return slices.back(); }
};

// Discrete L2 inner products: h1*h2*h3 * sum(a*b), component-summed for vectors.
double inner_product(const ScalarField& a, const ScalarField& b);
double inner_product(const VectorField& a, const VectorField& b);
double norm(const ScalarField& a);
double norm(const VectorField& a);

// y += alpha * x
void axpy(double alpha, const ScalarField& x, ScalarField& y);
void axpy(double alpha, const VectorField& x, VectorField& y);
// f *= alpha
void scale(ScalarField& f, double alpha);
void scale(VectorField& f, double alpha);

/// Throws DimensionError unless both grids are identical.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace diffreg
