#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bilab/solution_map.hpp"

namespace bilab {

// (u, d_nu u, Lap u, d_nu Lap u) restricted to the boundary.
struct CauchyData {
  BoundaryTrace u;
  BoundaryTrace du_n;
  BoundaryTrace lap_u;
  BoundaryTrace dlap_n;

  const DomainGrid& grid() const { return u.grid(); }
};

CauchyData operator+(const CauchyData& a, const CauchyData& b);
CauchyData operator-(const CauchyData& a, const CauchyData& b);
CauchyData operator*(double s, const CauchyData& a);

// Laplacian traces from the solver's m.
CauchyData cauchy_data(const MixedField& u);
// Laplacian from the discrete operator (one-sided at the boundary).
CauchyData cauchy_data(const ScalarField& u);

// max of the four trace sup-norms
double cauchy_norm(const CauchyData& cd);

// Random Navier data built from the first `modes` Fourier modes in arclength.
NavierData random_boundary_modes(const GridPtr& g, std::mt19937_64& rng, int modes = 3);
// Solution of the linearization at w with random boundary modes, scaled so
// that its c2 norm is `size`.
MixedField random_linear_solution(const SolutionMap& S, std::mt19937_64& rng, double size, int modes = 3);

struct StabilityProbeConfig {
  int n_pairs = 50;
  std::uint64_t seed = 1;
  double amplitude = 0.05;  // upper bound on c2 norm of each v
  int modes = 3;
  int threads = 0;          // 0: hardware concurrency
  double degenerate_tol = 1e-12;
};

struct StabilityReport {
  std::vector<double> ratios;  // NaN for skipped pairs
  double max_ratio = 0.0;
  int skipped = 0;
  std::uint64_t seed = 0;
};

// Ratios c2(u1 - u2) / cauchy_norm(u1 - u2) over random pairs of nonlinear
// solutions near w.
StabilityReport stability_probe(const SolutionMap& S, const StabilityProbeConfig& cfg);

struct CoincidentPair {
  double cauchy_mismatch = 0.0;
  double interior_difference = 0.0;
};

// Builds u1 = S(v) and a second solution u2 from the Navier data of u1 by
// Newton started at w, then compares them.
CoincidentPair coincident_pair(const SolutionMap& S, const MixedField& v);

}  // namespace bilab
