#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace bilab {

enum class Axis { x = 0, y = 1 };

// Outward normal of a boundary node: an axis and a sign.
struct Normal {
  Axis axis;
  int sign;  // +1 or -1
};

// Uniform node grid on the unit square [0,1]^2.
//
// Nodes are indexed k = j*nx + i (i along x, j along y). Boundary nodes are
// kept in a fixed counter-clockwise order starting at the origin: bottom edge
// left to right, right edge bottom to top, top edge right to left, left edge
// top to bottom. Corner nodes carry the x-axis normal.
class DomainGrid {
 public:
  DomainGrid(int nx, int ny);

  static std::shared_ptr<const DomainGrid> make(int nx, int ny);
  static std::shared_ptr<const DomainGrid> square(int n) { return make(n, n); }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  int i_of(std::size_t k) const { return static_cast<int>(k % nx_); }
  int j_of(std::size_t k) const { return static_cast<int>(k / nx_); }
  double x(int i) const { return i * hx_; }
  double y(int j) const { return j * hy_; }
  double x_of(std::size_t k) const { return x(i_of(k)); }
  double y_of(std::size_t k) const { return y(j_of(k)); }

  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
  }
  bool is_boundary(std::size_t k) const { return is_boundary(i_of(k), j_of(k)); }

  // Distance in node layers to the boundary; 0 on the boundary itself.
  int ring(int i, int j) const;
  int ring(std::size_t k) const { return ring(i_of(k), j_of(k)); }

  std::span<const std::size_t> boundary_nodes() const { return boundary_; }
  std::span<const std::size_t> interior_nodes() const { return interior_; }
  std::size_t boundary_size() const { return boundary_.size(); }

  // Position of node k in the boundary ordering, or -1 for interior nodes.
  long boundary_position(std::size_t k) const { return boundary_pos_[k]; }
  Normal normal(std::size_t boundary_slot) const { return normals_[boundary_slot]; }

  // Arclength coordinate in [0,4) of a boundary slot, following the
  // boundary ordering (bottom: x, right: 1+y, top: 3-x, left: 4-y).
  double arclength(std::size_t boundary_slot) const { return arclength_[boundary_slot]; }

  // Composite trapezoidal weight of node k.
  double weight(std::size_t k) const;

  bool operator==(const DomainGrid& other) const { return nx_ == other.nx_ && ny_ == other.ny_; }

 private:
  int nx_;
  int ny_;
  double hx_;
  double hy_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> interior_;
  std::vector<long> boundary_pos_;
  std::vector<Normal> normals_;
  std::vector<double> arclength_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

// Real values on the nodes of a grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double fill = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);
  static ScalarField from_function(GridPtr grid, const std::function<double(double, double)>& f);

  const GridPtr& grid_ptr() const { return grid_; }
  const DomainGrid& grid() const { return *grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j) { return values_[grid_->index(i, j)]; }
  double at(int i, int j) const { return values_[grid_->index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double max_abs() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a);
ScalarField operator*(double s, ScalarField a);
ScalarField operator*(ScalarField a, double s);

// Two components per node.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(GridPtr grid, double fill = 0.0);
  VectorField(ScalarField x, ScalarField y);

  const DomainGrid& grid() const { return x_.grid(); }
  const GridPtr& grid_ptr() const { return x_.grid_ptr(); }
  std::size_t component_count() const { return 2 * x_.size(); }

  ScalarField& component(Axis a) { return a == Axis::x ? x_ : y_; }
  const ScalarField& component(Axis a) const { return a == Axis::x ? x_ : y_; }
  ScalarField& x() { return x_; }
  ScalarField& y() { return y_; }
  const ScalarField& x() const { return x_; }
  const ScalarField& y() const { return y_; }

  std::array<double, 2> at(std::size_t k) const { return {x_[k], y_[k]}; }
  double max_abs() const;

 private:
  ScalarField x_;
  ScalarField y_;
};

// One value per boundary node in the grid's boundary ordering.
class BoundaryTrace {
 public:
  BoundaryTrace() = default;
  explicit BoundaryTrace(GridPtr grid, double fill = 0.0);
  BoundaryTrace(GridPtr grid, std::vector<double> values);
  static BoundaryTrace from_arclength(GridPtr grid, const std::function<double(double)>& f);

  const DomainGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t s) { return values_[s]; }
  double operator[](std::size_t s) const { return values_[s]; }
  std::span<const double> values() const { return values_; }
  double max_abs() const;

  BoundaryTrace& operator+=(const BoundaryTrace& other);
  BoundaryTrace& operator-=(const BoundaryTrace& other);
  BoundaryTrace& operator*=(double s);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b);
BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b);
BoundaryTrace operator*(double s, BoundaryTrace a);

void require_same_grid(const DomainGrid& a, const DomainGrid& b, const char* what);

// Second derivative along one axis at a node: centred in the interior of
// that axis, second-order one-sided at its ends.
double second_difference(const ScalarField& f, int i, int j, Axis axis);
// First derivative along one axis at a node, same convention.
double first_difference(const ScalarField& f, int i, int j, Axis axis);

ScalarField laplacian(const ScalarField& f);
VectorField gradient(const ScalarField& f);
ScalarField partial(const ScalarField& f, Axis axis);
BoundaryTrace normal_derivative(const ScalarField& f);
BoundaryTrace boundary_restriction(const ScalarField& f);
double inner_product(const ScalarField& f, const ScalarField& g);

// Discrete stand-in for the C^{2,alpha} norm: max over nodes of |f|,
// |df/dx|, |df/dy| and |Laplacian f|.
double c2_norm(const ScalarField& f);

// A field together with its discrete Laplacian m. Solutions of the mixed
// (u, m) system carry the m produced by the solver, whose boundary values are
// the prescribed Navier data rather than a one-sided stencil.
struct MixedField {
  ScalarField u;
  ScalarField m;

  MixedField() = default;
  MixedField(ScalarField u_, ScalarField m_);
  // m taken as laplacian(u).
  explicit MixedField(const ScalarField& u_);
  static MixedField zero(const GridPtr& grid);

  const DomainGrid& grid() const { return u.grid(); }
  const GridPtr& grid_ptr() const { return u.grid_ptr(); }

  MixedField& operator+=(const MixedField& o);
  MixedField& operator-=(const MixedField& o);
  MixedField& operator*=(double s);
};

MixedField operator+(MixedField a, const MixedField& b);
MixedField operator-(MixedField a, const MixedField& b);
MixedField operator-(MixedField a);
MixedField operator*(double s, MixedField a);

// max of |u|, |grad u| and |m|.
double c2_norm(const MixedField& f);
double c2_distance(const MixedField& a, const MixedField& b);

}  // namespace bilab
