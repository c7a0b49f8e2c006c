#pragma once

#include <vector>

namespace bilab {

// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Nodes from Newton iteration on the Legendre recurrence; n >= 1.
GaussRule gauss_legendre01(int n);

}  // namespace bilab
