#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "bilab/grid.hpp"

namespace testing_support {

using namespace bilab;
constexpr double pi = std::numbers::pi;

inline double observed_order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

inline ScalarField sinsin(const GridPtr& g) {
  return ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
}

// Smooth random field: a few low sine/cosine modes with random amplitudes.
inline ScalarField random_smooth(const GridPtr& g, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double c[3][3];
  for (auto& row : c)
    for (double& v : row) v = U(rng);
  double phase = U(rng);
  return ScalarField::from_function(g, [&](double x, double y) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += c[a][b] * std::cos(pi * a * x + phase) * std::cos(pi * b * y - phase);
    return amp * s / 9.0;
  });
}

// Smooth field vanishing with all derivatives outside [d, 1-d]^2.
inline ScalarField random_clamped(const GridPtr& g, std::mt19937_64& rng, double d = 0.2) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double c[3][3];
  for (auto& row : c)
    for (double& v : row) v = U(rng);
  return ScalarField::from_function(g, [&](double x, double y) {
    auto bump = [d](double t) {
      double s = (t - d) / (1 - 2 * d);
      if (s <= 0.0 || s >= 1.0) return 0.0;
      return std::exp(-1.0 / (s * (1 - s))) * 60.0;
    };
    double b = bump(x) * bump(y);
    if (b == 0.0) return 0.0;
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 3; ++k) s += c[a][k] * std::cos(pi * a * x) * std::cos(pi * k * y);
    return b * s;
  });
}

inline double max_abs_interior(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t k : f.grid().interior_nodes()) m = std::max(m, std::abs(f[k]));
  return m;
}

}  // namespace testing_support
