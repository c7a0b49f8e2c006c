#pragma once

#include <vector>

#include "bilab/solution_map.hpp"

namespace bilab {

// Discrete clamped fields: zero on the first `layers` node rings. Four rings
// make value, normal difference, Lap_h and its normal difference all vanish
// with the one-sided boundary stencils.
class ClampedSpace {
 public:
  explicit ClampedSpace(GridPtr grid, int layers = 4);

  const GridPtr& grid_ptr() const { return grid_; }
  int layers() const { return layers_; }
  const std::vector<std::size_t>& free_nodes() const { return free_; }
  std::size_t dimension() const { return free_.size(); }

  bool contains(const ScalarField& y, double tol = 0.0) const;
  // zeroes the clamped rings
  ScalarField restrict(const ScalarField& f) const;

 private:
  GridPtr grid_;
  int layers_;
  std::vector<std::size_t> free_;
};

struct ProjectionResult {
  ScalarField Pu;  // L y on interior nodes, zero on the boundary
  ScalarField y;   // clamped minimiser
  double distance = 0.0;           // sup over interior of |u - Pu|
  double relative_distance = 0.0;  // distance / sup |u| (0 when u = 0)
};

// Least-squares projection onto Z = L(Y). The minimiser over Y of
// sum_int (L y - u)^2 comes from the augmented system
// [alpha I, B; B^T, 0] (s, y) = (u, 0) with B = L restricted to Y.
class ZProjector {
 public:
  explicit ZProjector(AssembledOperator op, int layers = 4);

  const AssembledOperator& op() const { return op_; }
  const ClampedSpace& space() const { return space_; }

  ProjectionResult project(const ScalarField& u) const;
  // y in Y with L y = z; throws PreconditionError if z is not in Z.
  ScalarField inverse(const ScalarField& z, double tol = 1e-8) const;

 private:
  struct Shared;
  AssembledOperator op_;
  ClampedSpace space_;
  std::shared_ptr<Shared> shared_;
};

ProjectionResult project_Z(const AssembledOperator& op, const ScalarField& u);
ScalarField inverse_on_Z(const AssembledOperator& op, const ScalarField& z);

struct SecondMapConfig {
  double tol = 1e-12;
  int max_iter = 60;
  double cauchy_tol = 1e-8;  // admissible Cauchy mismatch of w1 and w2
  double coeff_tol = 1e-10;  // for the derivative identity precondition
  double divergence_cap = 1e3;
  int layers = 4;

  void validate() const;
};

struct SecondMapResult {
  MixedField u1;  // S_{Q1,w1}(v)
  MixedField u2;  // u1 - r
  ScalarField r;
  double cauchy_defect = 0.0;  // cauchy_norm(cd(u2) - cd(u1))
  double q2_residual = 0.0;    // interior sup of the Q2 equation at u2
  double z_distance = 0.0;     // distance of the last right-hand side to Z
  int iterations = 0;
  bool converged = false;
  std::vector<double> increments;
};

// T_{Q2}(v): the Q2 solution with the Cauchy data of S_{Q1,w1}(v), from
// r = G(P f(v, r)) with f(v, r) = (A2 Lap + X2.grad + V2) r + Q2(u1 - r) - Q1(u1).
class SecondSolutionMap {
 public:
  SecondSolutionMap(SolutionMap S1, NonlinearityPtr Q2, MixedField w2, SecondMapConfig cfg = {});

  const SolutionMap& first() const { return S1_; }
  const MixedField& w2() const { return w2_; }
  const Nonlinearity& Q2() const { return *Q2_; }
  const NonlinearityPtr& Q2_ptr() const { return Q2_; }
  const ZProjector& projector() const { return proj_; }
  double base_cauchy_mismatch() const { return base_mismatch_; }
  // sup difference of (A, X, V) between the two linearizations
  double coefficient_gap() const;

  SecondMapResult apply(const MixedField& v) const;
  // sup |(T(eps h) - T(-eps h)) / (2 eps) - h|
  double dT_identity_check(const MixedField& h, double eps) const;

 private:
  SolutionMap S1_;
  NonlinearityPtr Q2_;
  MixedField w2_;
  SecondMapConfig cfg_;
  LinearizedCoefficients c2_;
  ZProjector proj_;
  double base_mismatch_;
};

}  // namespace bilab
