#pragma once

#include "bilab/nonlinearity.hpp"

namespace bilab {

// (x, z, p, q) -> Lap^2 phi(x) + Q(x, z + phi, p + grad phi, q + Lap phi).
// phi must be clamped (zero Cauchy quadruple); its discrete derivatives are
// precomputed on phi's grid and the result may only be evaluated at the nodes
// of that grid.
NonlinearityPtr gauge_transform(NonlinearityPtr Q, const ScalarField& phi);

// exp(1 - 1/(1 - rho^2)) for rho = |x - c| / radius < 1, zero outside.
ScalarField radial_bump(const GridPtr& g, double amplitude, double cx = 0.5, double cy = 0.5,
                        double radius = 0.35);

}  // namespace bilab
