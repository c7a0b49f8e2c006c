#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bilab/runge.hpp"
#include "bilab/second_map.hpp"

namespace bilab {

// One measurement pair: v1 solves L1 v1 = 0 with random Navier data g, u2
// solves L2 u2 = 0 with the same g, v2 is the op2 adjoint state for the
// source F supported next to the boundary.
struct SolutionPair {
  MixedField v1;
  MixedField u2;
  ScalarField v2;
  ScalarField F;
};

struct PairConfig {
  int modes = 6;         // boundary Fourier modes per Navier slot
  int source_rings = 2;  // F lives on rings 1..source_rings
  int threads = 0;
};

std::vector<SolutionPair> generate_solution_pairs(const AssembledOperator& op1, const AssembledOperator& op2,
                                                  int n_pairs, std::uint64_t seed, const PairConfig& cfg = {});

// Tensor Chebyshev polynomials T_i(2x-1) T_j(2y-1), ordered by max(i,j),
// then i+j, then i.
std::vector<std::array<int, 2>> chebyshev_indices(int K);
double chebyshev_tensor(int i, int j, double x, double y);

// Rows: sum_int v2 b_k times m1, d_x v1, d_y v1 and v1, for the blocks
// [a | b_x | b_y | c]; rhs = -sum F (v1 - u2). With d = coefficients of op1
// minus op2 the identity reads rows . (a, b_x, b_y, c) = rhs.
struct IdentitySystem {
  int K = 0;
  std::vector<std::array<int, 2>> indices;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;

  long n_rows() const { return rows.rows(); }
  long n_cols() const { return rows.cols(); }
};

IdentitySystem assemble_identity_system(const std::vector<SolutionPair>& pairs, int K);

// max over pairs of |sum_int v2 (dA m1 + dX.grad v1 + dV v1) - rhs| relative
// to the size of the terms, for the true coefficient differences of op1 - op2.
double identity_defect(const std::vector<SolutionPair>& pairs, const AssembledOperator& op1,
                       const AssembledOperator& op2);

struct RecoveryResult {
  ScalarField a;
  VectorField b;
  ScalarField c;
  Eigen::VectorXd coeffs;
  double residual = 0.0;   // |M x - rhs| / |rhs| after row normalisation (0 if rhs = 0)
  double rhs_norm = 0.0;   // max |rhs| before normalisation
  double condition = 0.0;  // sigma_max / sigma_min of the normalised system
  double lambda = 0.0;
};

// Tikhonov least squares with parameter reg * sigma_max^2, rows normalised.
RecoveryResult recover_coefficient_difference(const IdentitySystem& sys, const GridPtr& grid, double reg = 1e-8);

// sqrt(sum w (f - g)^2) / sqrt(sum w g^2) with trapezoid weights.
double relative_l2_error(const ScalarField& f, const ScalarField& g);

struct PhiIndependence {
  double max_deviation = 0.0;      // max c2 norm of phi_v - phi_first
  std::vector<double> deviations;  // per element of v_list
  double max_coefficient_gap = 0.0;
};

// phi_v = u2 - u1 from the second map for each v; checks first that the
// linearizations of Q1 at u1 and Q2 at u2 agree to coeff_tol.
PhiIndependence phi_independence_check(const SecondSolutionMap& T, const std::vector<MixedField>& v_list,
                                       double coeff_tol = 1e-8);

struct SweepConfig {
  int n_lambda = 9;
  double lambda_fraction = 0.9;  // lambdas span +-fraction * epsilon
  double t_fraction = 0.9;       // |t| c2(v) stays below t_fraction * delta_cap
  double root_tol = 1e-8;
  int max_bisect = 200;
  int basis_K = 24;
  PointTargets targets;
  int threads = 0;
};

struct SweepRecord {
  double x = 0.0;
  double y = 0.0;
  std::size_t node = 0;
  double lambda = 0.0;
  double t = 0.0;
  double rho = 0.0;
  double rho_lap = 0.0;
  std::array<double, 2> rho_grad{};
  Jet jet{};
  double q1 = 0.0;
  double tq2 = 0.0;
  double residual = 0.0;
  bool skipped = false;
  std::string note;
};

struct SweepPoint {
  double x = 0.0;
  double y = 0.0;
  double t_max = 0.0;
  double epsilon = 0.0;  // usable lambda range
  double control_miss = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<SweepRecord> records;
  double max_residual = 0.0;
  double max_root_error = 0.0;
  int skipped = 0;
};

// For each point: point-controlled v, bisection on rho(t) = u_{1,tv}(x) - w1(x)
// for each lambda, and |Q1 - T_phi Q2| at the reached jet.
SweepResult reachable_sweep(const SolutionMap& S1, const NonlinearityPtr& Q2, const ScalarField& phi,
                            const std::vector<std::array<double, 2>>& points, const SweepConfig& cfg = {});

}  // namespace bilab
