#pragma once

#include <vector>

#include "bilab/linear_solver.hpp"
#include "bilab/nonlinearity.hpp"

namespace bilab {

struct FixedPointConfig {
  double tol = 1e-12;        // successive sup-difference stopping threshold
  int max_iter = 50;
  double delta_cap = 0.5;    // radius of the ball in the c2 surrogate norm
  int quad_nodes = 8;
  double base_tol = 1e-8;    // admissible residual of the base solution w

  void validate() const;
};

// Interior values of Lap_h m + Q(x, u, grad u, m) - F (zero on the boundary).
ScalarField nonlinear_residual(const Nonlinearity& Q, const MixedField& u);
ScalarField nonlinear_residual(const Nonlinearity& Q, const MixedField& u, const ScalarField& F);

struct FixedPointResult {
  MixedField r;
  int iterations = 0;
  std::vector<double> increments;  // sup |r_{k+1} - r_k| per iteration
  std::vector<double> norms;       // c2 norm of r_{k+1}
};

// The solution map u = w + v + Phi(v) built around a base solution w.
class SolutionMap {
 public:
  SolutionMap(NonlinearityPtr Q, MixedField w, FixedPointConfig cfg = {});

  const Nonlinearity& Q() const { return *Q_; }
  const NonlinearityPtr& Q_ptr() const { return Q_; }
  const MixedField& w() const { return w_; }
  const FixedPointConfig& config() const { return cfg_; }
  const LinearizedCoefficients& coefficients() const { return coeffs_; }
  const AssembledOperator& linearization() const { return op_; }
  double base_residual() const { return base_residual_; }

  // r = -G(R(v + r), 0, 0) iterated from r = 0.
  FixedPointResult fixed_point(const MixedField& v) const;
  MixedField apply(const MixedField& v) const;
  // v = G(0, (u - w)|, m(u - w)|).
  MixedField converse(const MixedField& u) const;
  MixedField directional_derivative(const MixedField& v, const MixedField& h, double eps) const;

  // Lap_h m_u + Q(u) - (L v) on interior nodes.
  ScalarField equation_residual(const MixedField& v, const MixedField& u) const;

 private:
  NonlinearityPtr Q_;
  MixedField w_;
  FixedPointConfig cfg_;
  LinearizedCoefficients coeffs_;
  AssembledOperator op_;
  double base_residual_;
};

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 30;
};

struct NewtonResult {
  MixedField u;
  int iterations = 0;
  std::vector<double> residuals;
};

// Newton iteration for Lap^2 u + Q(u) = F with Navier data bc, started at u0.
NewtonResult solve_nonlinear(const Nonlinearity& Q, const ScalarField& F, const NavierData& bc,
                             const MixedField& u0, const NewtonConfig& cfg = {});

}  // namespace bilab
