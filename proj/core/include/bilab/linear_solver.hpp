#pragma once

#include <memory>

#include <Eigen/Sparse>

#include "bilab/grid.hpp"
#include "bilab/nonlinearity.hpp"

namespace bilab {

struct NavierData {
  BoundaryTrace f0;  // u on the boundary
  BoundaryTrace f1;  // Laplacian u on the boundary

  static NavierData zero(const GridPtr& grid);
  // Navier data read off a mixed field: (u, m) on the boundary.
  static NavierData of(const MixedField& f);
};

NavierData operator+(const NavierData& a, const NavierData& b);
NavierData operator-(const NavierData& a, const NavierData& b);
NavierData operator*(double s, const NavierData& a);

// L = Laplacian^2 + A Laplacian + X.grad + V discretised in mixed form.
//
// Unknown vector [u_0..u_{N-1}, m_0..m_{N-1}]. Row k: u_k = f0 on the
// boundary, Lap_h u - m = 0 inside. Row N+k: m_k = f1 on the boundary,
// Lap_h m + A m + X.D u + V u = F inside.
//
// Copies share the factorisation, which is built once on first use.
class AssembledOperator {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  AssembledOperator(GridPtr grid, ScalarField A, VectorField X, ScalarField V);
  explicit AssembledOperator(const LinearizedCoefficients& c);
  static AssembledOperator biharmonic(const GridPtr& grid);

  const GridPtr& grid_ptr() const { return grid_; }
  const DomainGrid& grid() const { return *grid_; }
  const ScalarField& A() const { return A_; }
  const VectorField& X() const { return X_; }
  const ScalarField& V() const { return V_; }

  const SparseMatrix& system_matrix() const;
  // N x N matrix of u -> L u with m = laplacian(u); boundary rows are empty.
  const SparseMatrix& reduced_matrix() const;

  MixedField solve(const ScalarField& F, const NavierData& bc) const;

  // L applied with the field's own m (boundary rows give 0).
  ScalarField apply(const MixedField& u) const;
  // L applied with m = laplacian(u).
  ScalarField apply(const ScalarField& u) const;
  // Transpose of the reduced matrix applied to y.
  ScalarField apply_transpose(const ScalarField& y) const;

  // Adjoint state: solves the transpose mixed system with F in the u block
  // and returns the m block on interior nodes. For every mixed field z with
  // zero Navier data and m = Lap_h u inside, sum_int v (L z) = sum F u.
  ScalarField solve_adjoint(const ScalarField& F) const;
  // Discretised formal adjoint, v = 0 and Lap v + A v = 0 on the boundary, for
  // cross-checking solve_adjoint.
  ScalarField solve_formal_adjoint(const ScalarField& F) const;

  // Relative residual bound enforced by every solve.
  static constexpr double kResidualTolerance = 1e-10;

 private:
  struct Shared;
  GridPtr grid_;
  ScalarField A_;
  VectorField X_;
  ScalarField V_;
  std::shared_ptr<Shared> shared_;
};

// Stencil rows of the grid operators as sparse matrices over node values.
AssembledOperator::SparseMatrix laplacian_matrix(const DomainGrid& g);
AssembledOperator::SparseMatrix partial_matrix(const DomainGrid& g, Axis axis);

}  // namespace bilab
