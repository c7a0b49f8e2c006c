#pragma once

#include <array>
#include <vector>

#include "bilab/linear_solver.hpp"

namespace bilab {

// Real Fourier mode j in boundary arclength s in [0, 4): j = 0 is the
// constant, j = 2l-1 is cos(2 pi l s / 4) and j = 2l is sin(2 pi l s / 4).
double boundary_fourier_mode(int j, double s);

// Member k carries Fourier mode k/2 in f0 (k even) or f1 (k odd).
NavierData basis_boundary_data(const GridPtr& g, int k);

struct SolutionBasis {
  AssembledOperator op;
  std::vector<MixedField> members;

  int size() const { return static_cast<int>(members.size()); }
  // smallest singular value of the Gram matrix of the boundary data (f0, f1)
  double boundary_gram_min_singular() const;
  // sum c_k member_k
  MixedField combine(const std::vector<double>& coeffs) const;
};

SolutionBasis build_basis(const AssembledOperator& op, int K, int threads = 0);

// Axis-aligned node rectangle i0..i1 x j0..j1 (inclusive).
class Subdomain {
 public:
  Subdomain(GridPtr grid, int i0, int i1, int j0, int j1);
  // centred square with the given diameter (diagonal)
  static Subdomain centered(const GridPtr& grid, double diameter);

  const DomainGrid& grid() const { return *grid_; }
  int i0() const { return i0_; }
  int i1() const { return i1_; }
  int j0() const { return j0_; }
  int j1() const { return j1_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  // nodes whose full stencil lies in the rectangle
  const std::vector<std::size_t>& inner_nodes() const { return inner_; }
  double diameter() const;

 private:
  GridPtr grid_;
  int i0_, i1_, j0_, j1_;
  std::vector<std::size_t> nodes_;
  std::vector<std::size_t> inner_;
};

struct LocalApproximation {
  std::vector<double> coeffs;
  MixedField approximant;
  double error = 0.0;           // C2 surrogate error on the subdomain
  double relative_error = 0.0;  // error / C2 surrogate norm of the target
  double condition = 0.0;       // sigma_max / sigma_min of the weighted system
};

struct C2Weights {
  double value = 1.0;
  double gradient = 1.0;
  double laplacian = 1.0;
};

// max over subdomain nodes of the weighted |value|, |gradient| and |m| misfits
double local_c2_norm(const MixedField& f, const Subdomain& omega, const C2Weights& w = {});

// Regularised least squares over the basis matching value, gradient and
// Laplacian on the subdomain. Tikhonov parameter reg * sigma_max^2.
LocalApproximation approximate_local_solution(const SolutionBasis& basis, const MixedField& u_local,
                                              const Subdomain& omega, double reg = 1e-14,
                                              const C2Weights& w = {});

struct PointTargets {
  double value = 4.0;
  std::array<double, 2> gradient{4.0, 4.0};
  double laplacian = 4.0;
};

struct PointControl {
  MixedField field;
  std::vector<double> coeffs;
  std::array<double, 4> reached{};  // value, grad x, grad y, Laplacian at x0
  double max_miss = 0.0;
  double condition = 0.0;
};

// Minimum-norm combination of basis members with the prescribed jet at node x0.
PointControl point_control(const SolutionBasis& basis, std::size_t x0, const PointTargets& t,
                           double rcond = 1e-12);

std::size_t nearest_node(const DomainGrid& g, double x, double y);

}  // namespace bilab
