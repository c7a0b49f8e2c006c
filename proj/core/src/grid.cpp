#include "bilab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bilab/error.hpp"

namespace bilab {

DomainGrid::DomainGrid(int nx, int ny) : nx_(nx), ny_(ny) {
  if (nx < 5 || ny < 5) {
    throw PreconditionError("grid too small: need nx, ny >= 5, got " + std::to_string(nx) +
                            "x" + std::to_string(ny));
  }
  hx_ = 1.0 / (nx - 1);
  hy_ = 1.0 / (ny - 1);

  boundary_pos_.assign(size(), -1);
  auto push = [&](int i, int j, Normal n, double s) {
    std::size_t k = index(i, j);
    boundary_pos_[k] = static_cast<long>(boundary_.size());
    boundary_.push_back(k);
    normals_.push_back(n);
    arclength_.push_back(s);
  };
  auto corner_or = [&](int i, Normal edge) -> Normal {
    if (i == 0) return {Axis::x, -1};
    if (i == nx_ - 1) return {Axis::x, +1};
    return edge;
  };
  for (int i = 0; i < nx_; ++i) push(i, 0, corner_or(i, {Axis::y, -1}), x(i));
  for (int j = 1; j < ny_; ++j) push(nx_ - 1, j, {Axis::x, +1}, 1.0 + y(j));
  for (int i = nx_ - 2; i >= 0; --i) push(i, ny_ - 1, corner_or(i, {Axis::y, +1}), 3.0 - x(i));
  for (int j = ny_ - 2; j >= 1; --j) push(0, j, {Axis::x, -1}, 4.0 - y(j));

  for (std::size_t k = 0; k < size(); ++k) {
    if (boundary_pos_[k] < 0) interior_.push_back(k);
  }
}

std::shared_ptr<const DomainGrid> DomainGrid::make(int nx, int ny) {
  return std::make_shared<const DomainGrid>(nx, ny);
}

int DomainGrid::ring(int i, int j) const {
  return std::min({i, j, nx_ - 1 - i, ny_ - 1 - j});
}

double DomainGrid::weight(std::size_t k) const {
  int i = i_of(k);
  int j = j_of(k);
  double wx = (i == 0 || i == nx_ - 1) ? 0.5 : 1.0;
  double wy = (j == 0 || j == ny_ - 1) ? 0.5 : 1.0;
  return wx * wy * hx_ * hy_;
}

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)) {
  values_.assign(grid_->size(), fill);
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw PreconditionError("field value count " + std::to_string(values_.size()) +
                            " does not match grid size " + std::to_string(grid_->size()));
  }
}

ScalarField ScalarField::from_function(GridPtr grid,
                                       const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(grid->x_of(k), grid->y_of(k));
  return out;
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(*grid_, *other.grid_, "field addition");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(*grid_, *other.grid_, "field subtraction");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator-(ScalarField a) { return a *= -1.0; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
ScalarField operator*(ScalarField a, double s) { return a *= s; }

VectorField::VectorField(GridPtr grid, double fill) : x_(grid, fill), y_(grid, fill) {}

VectorField::VectorField(ScalarField x, ScalarField y) : x_(std::move(x)), y_(std::move(y)) {
  require_same_grid(x_.grid(), y_.grid(), "vector field components");
}

double VectorField::max_abs() const { return std::max(x_.max_abs(), y_.max_abs()); }

BoundaryTrace::BoundaryTrace(GridPtr grid, double fill) : grid_(std::move(grid)) {
  values_.assign(grid_->boundary_size(), fill);
}

BoundaryTrace::BoundaryTrace(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->boundary_size()) {
    throw PreconditionError("trace length " + std::to_string(values_.size()) +
                            " does not match boundary node count " +
                            std::to_string(grid_->boundary_size()));
  }
}

BoundaryTrace BoundaryTrace::from_arclength(GridPtr grid, const std::function<double(double)>& f) {
  BoundaryTrace out(grid);
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = f(grid->arclength(s));
  return out;
}

double BoundaryTrace::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

BoundaryTrace& BoundaryTrace::operator+=(const BoundaryTrace& other) {
  require_same_grid(*grid_, *other.grid_, "trace addition");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

BoundaryTrace& BoundaryTrace::operator-=(const BoundaryTrace& other) {
  require_same_grid(*grid_, *other.grid_, "trace subtraction");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

BoundaryTrace& BoundaryTrace::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b) { return a += b; }
BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b) { return a -= b; }
BoundaryTrace operator*(double s, BoundaryTrace a) { return a *= s; }

void require_same_grid(const DomainGrid& a, const DomainGrid& b, const char* what) {
  if (!(a == b)) {
    throw PreconditionError(std::string(what) + ": grid mismatch (" + std::to_string(a.nx()) +
                            "x" + std::to_string(a.ny()) + " vs " + std::to_string(b.nx()) +
                            "x" + std::to_string(b.ny()) + ")");
  }
}

namespace {

// Value of f when stepping `off` nodes along the axis from (i, j).
inline double along(const ScalarField& f, int i, int j, Axis axis, int off) {
  return axis == Axis::x ? f.at(i + off, j) : f.at(i, j + off);
}

}  // namespace

double second_difference(const ScalarField& f, int i, int j, Axis axis) {
  const DomainGrid& g = f.grid();
  int n = axis == Axis::x ? g.nx() : g.ny();
  int p = axis == Axis::x ? i : j;
  double h = axis == Axis::x ? g.hx() : g.hy();
  double inv = 1.0 / (h * h);
  if (p == 0) {
    return (2 * along(f, i, j, axis, 0) - 5 * along(f, i, j, axis, 1) +
            4 * along(f, i, j, axis, 2) - along(f, i, j, axis, 3)) * inv;
  }
  if (p == n - 1) {
    return (2 * along(f, i, j, axis, 0) - 5 * along(f, i, j, axis, -1) +
            4 * along(f, i, j, axis, -2) - along(f, i, j, axis, -3)) * inv;
  }
  return (along(f, i, j, axis, -1) - 2 * along(f, i, j, axis, 0) + along(f, i, j, axis, 1)) * inv;
}

double first_difference(const ScalarField& f, int i, int j, Axis axis) {
  const DomainGrid& g = f.grid();
  int n = axis == Axis::x ? g.nx() : g.ny();
  int p = axis == Axis::x ? i : j;
  double h = axis == Axis::x ? g.hx() : g.hy();
  if (p == 0) {
    return (-3 * along(f, i, j, axis, 0) + 4 * along(f, i, j, axis, 1) -
            along(f, i, j, axis, 2)) / (2 * h);
  }
  if (p == n - 1) {
    return (3 * along(f, i, j, axis, 0) - 4 * along(f, i, j, axis, -1) +
            along(f, i, j, axis, -2)) / (2 * h);
  }
  return (along(f, i, j, axis, 1) - along(f, i, j, axis, -1)) / (2 * h);
}

ScalarField laplacian(const ScalarField& f) {
  const DomainGrid& g = f.grid();
  ScalarField out(f.grid_ptr());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      out.at(i, j) = second_difference(f, i, j, Axis::x) + second_difference(f, i, j, Axis::y);
    }
  }
  return out;
}

ScalarField partial(const ScalarField& f, Axis axis) {
  const DomainGrid& g = f.grid();
  ScalarField out(f.grid_ptr());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) out.at(i, j) = first_difference(f, i, j, axis);
  }
  return out;
}

VectorField gradient(const ScalarField& f) {
  return VectorField(partial(f, Axis::x), partial(f, Axis::y));
}

BoundaryTrace normal_derivative(const ScalarField& f) {
  const DomainGrid& g = f.grid();
  BoundaryTrace out(f.grid_ptr());
  for (std::size_t s = 0; s < g.boundary_size(); ++s) {
    std::size_t k = g.boundary_nodes()[s];
    Normal n = g.normal(s);
    // One-sided stencils already point outward at the ends of each axis.
    out[s] = first_difference(f, g.i_of(k), g.j_of(k), n.axis) * n.sign;
  }
  return out;
}

BoundaryTrace boundary_restriction(const ScalarField& f) {
  const DomainGrid& g = f.grid();
  BoundaryTrace out(f.grid_ptr());
  for (std::size_t s = 0; s < g.boundary_size(); ++s) out[s] = f[g.boundary_nodes()[s]];
  return out;
}

double inner_product(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  const DomainGrid& grid = f.grid();
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) sum += grid.weight(k) * f[k] * g[k];
  return sum;
}

double c2_norm(const ScalarField& f) {
  const DomainGrid& g = f.grid();
  double m = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      double lap = second_difference(f, i, j, Axis::x) + second_difference(f, i, j, Axis::y);
      m = std::max({m, std::abs(f.at(i, j)), std::abs(first_difference(f, i, j, Axis::x)),
                    std::abs(first_difference(f, i, j, Axis::y)), std::abs(lap)});
    }
  }
  return m;
}

MixedField::MixedField(ScalarField u_, ScalarField m_) : u(std::move(u_)), m(std::move(m_)) {
  require_same_grid(u.grid(), m.grid(), "mixed field");
}

MixedField::MixedField(const ScalarField& u_) : u(u_), m(laplacian(u_)) {}

MixedField MixedField::zero(const GridPtr& grid) {
  return MixedField(ScalarField(grid), ScalarField(grid));
}

MixedField& MixedField::operator+=(const MixedField& o) {
  u += o.u;
  m += o.m;
  return *this;
}

MixedField& MixedField::operator-=(const MixedField& o) {
  u -= o.u;
  m -= o.m;
  return *this;
}

MixedField& MixedField::operator*=(double s) {
  u *= s;
  m *= s;
  return *this;
}

MixedField operator+(MixedField a, const MixedField& b) { return a += b; }
MixedField operator-(MixedField a, const MixedField& b) { return a -= b; }
MixedField operator-(MixedField a) { return a *= -1.0; }
MixedField operator*(double s, MixedField a) { return a *= s; }

double c2_norm(const MixedField& f) {
  const DomainGrid& g = f.grid();
  double mx = std::max(f.u.max_abs(), f.m.max_abs());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      mx = std::max({mx, std::abs(first_difference(f.u, i, j, Axis::x)),
                     std::abs(first_difference(f.u, i, j, Axis::y))});
    }
  }
  return mx;
}

double c2_distance(const MixedField& a, const MixedField& b) { return c2_norm(a - b); }

}  // namespace bilab
