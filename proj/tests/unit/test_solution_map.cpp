#include <Eigen/Dense>

#include "bilab/error.hpp"
#include "bilab/solution_map.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace testing_support;

namespace {

NavierData boundary_modes(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  double a = U(rng), b = U(rng), c = U(rng), d = U(rng), e = U(rng);
  return {BoundaryTrace::from_arclength(g, [=](double s) { return a + b * std::cos(pi * s / 2) + e * std::sin(pi * s); }),
          BoundaryTrace::from_arclength(g, [=](double s) { return c * std::sin(pi * s / 2) + d; })};
}

// solution of the linearized problem with random boundary modes, scaled to the given c2 norm
MixedField linear_solution(const AssembledOperator& op, std::mt19937_64& rng, double size) {
  const GridPtr& g = op.grid_ptr();
  MixedField v = op.solve(ScalarField(g), boundary_modes(g, rng));
  return (size / c2_norm(v)) * v;
}

// base solution of Lap^2 w + Q(w) = 0 with nonzero Navier data
MixedField base_solution(const NonlinearityPtr& Q, const GridPtr& g, double size) {
  NavierData bc{BoundaryTrace::from_arclength(g, [=](double s) { return size * std::cos(pi * s / 2); }),
                BoundaryTrace::from_arclength(g, [=](double s) { return size * std::sin(pi * s); })};
  return solve_nonlinear(*Q, ScalarField(g), bc, MixedField::zero(g)).u;
}

double sup(const MixedField& a) { return std::max(a.u.max_abs(), a.m.max_abs()); }

}  // namespace

TEST_CASE("fixed point of the zero field") {
  auto g = DomainGrid::square(17);
  SolutionMap S(make_power(3), MixedField::zero(g));
  auto res = S.fixed_point(MixedField::zero(g));
  CHECK(res.iterations == 1);
  CHECK(sup(res.r) == 0.0);
  CHECK(sup(S.apply(MixedField::zero(g)) - S.w()) == 0.0);
}

TEST_CASE("zero nonlinearity gives an affine map") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(11);
  SolutionMap S(make_zero(), MixedField::zero(g));
  MixedField v = linear_solution(S.linearization(), rng, 0.2);
  auto res = S.fixed_point(v);
  CHECK(sup(res.r) == 0.0);
  CHECK(sup(S.apply(v) - v) == 0.0);
  MixedField h = linear_solution(S.linearization(), rng, 0.1);
  CHECK(sup(S.directional_derivative(v, h, 1e-3) - h) < 1e-13);
  CHECK(sup(S.converse(S.w() + v) - v) < 1e-12);
}

TEST_CASE("cubic nonlinearity around zero") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(12);
  SolutionMap S(make_power(3), MixedField::zero(g));
  MixedField v = linear_solution(S.linearization(), rng, 0.1);
  auto res = S.fixed_point(v);
  CHECK(res.iterations <= 15);
  CHECK(res.increments.back() < 1e-12);
  MixedField u = S.w() + v + res.r;
  // u solves the nonlinear equation because v solves the linear one
  CHECK(max_abs_interior(nonlinear_residual(S.Q(), u)) < 1e-8);
  CHECK(max_abs_interior(S.equation_residual(v, u)) < 1e-8);
  CHECK(c2_norm(res.r) <= c2_norm(v) * c2_norm(v));
  // zero Navier data for r
  for (std::size_t k : g->boundary_nodes()) {
    CHECK(res.r.u[k] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(res.r.m[k] == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("remainder ratio stays bounded along a ray") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(13);
  // the quadratic nonlinearity has a genuine second-order remainder
  SolutionMap S(make_zq(1.0), base_solution(make_zq(1.0), g, 0.3));
  MixedField v = linear_solution(S.linearization(), rng, 0.1);
  std::vector<double> ratios;
  for (double s : {1.0, 0.5, 0.25}) {
    MixedField sv = s * v;
    ratios.push_back(c2_norm(S.fixed_point(sv).r) / (s * s));
  }
  double lo = *std::min_element(ratios.begin(), ratios.end());
  double hi = *std::max_element(ratios.begin(), ratios.end());
  CHECK(lo > 0);
  CHECK(hi / lo < 2.0);
}

TEST_CASE("tangency at the origin") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(14);
  auto Q = make_power(3);
  SolutionMap S(Q, base_solution(Q, g, 0.4));
  MixedField h = linear_solution(S.linearization(), rng, 0.1);
  MixedField zero = MixedField::zero(g);
  double e1 = sup(S.directional_derivative(zero, h, 1e-1) - h);
  double e2 = sup(S.directional_derivative(zero, h, 5e-2) - h);
  CHECK(e1 > 0);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("derivative solves the linearization at u_v") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(15);
  auto Q = make_power(3);
  SolutionMap S(Q, base_solution(Q, g, 0.4));
  MixedField v = linear_solution(S.linearization(), rng, 0.1);
  MixedField h = linear_solution(S.linearization(), rng, 0.1);
  AssembledOperator Lv(linearized_coeffs(*Q, S.apply(v)));
  double r1 = max_abs_interior(Lv.apply(S.directional_derivative(v, h, 0.1)));
  double r2 = max_abs_interior(Lv.apply(S.directional_derivative(v, h, 0.05)));
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("converse round trip") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(16);
  auto Q = make_power(3);
  SolutionMap S(Q, base_solution(Q, g, 0.4));
  CHECK(sup(S.converse(S.w())) < 1e-14);
  for (int trial = 0; trial < 3; ++trial) {
    MixedField v = linear_solution(S.linearization(), rng, 0.05 + 0.05 * trial);
    MixedField u = S.apply(v);
    CHECK(sup(S.converse(u) - v) < 1e-8);
  }
}

TEST_CASE("directional derivatives stay independent") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(17);
  auto Q = make_power(3);
  SolutionMap S(Q, base_solution(Q, g, 0.4));
  MixedField v = linear_solution(S.linearization(), rng, 0.1);
  std::vector<MixedField> d;
  for (int i = 0; i < 3; ++i) {
    MixedField h = linear_solution(S.linearization(), rng, 1.0);
    d.push_back(S.directional_derivative(v, h, 1e-3));
  }
  Eigen::Matrix3d G;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) G(a, b) = inner_product(d[a].u, d[b].u);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(G);
  CHECK(svd.singularValues()(2) / svd.singularValues()(0) > 1e-4);
}

TEST_CASE("fixed point failures") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(18);
  FixedPointConfig cfg;
  cfg.delta_cap = 0.05;
  SolutionMap small(make_power(3), MixedField::zero(g), cfg);
  MixedField v = linear_solution(small.linearization(), rng, 0.1);
  CHECK_THROWS_AS(small.fixed_point(v), ContractionError);

  SolutionMap strong(make_power(2, 5000.0), MixedField::zero(g));
  MixedField big = linear_solution(strong.linearization(), rng, 0.45);
  CHECK_THROWS_WITH_AS(strong.fixed_point(big), doctest::Contains("contraction ball exceeded"), ContractionError);

  cfg = FixedPointConfig{};
  cfg.max_iter = 1;
  SolutionMap one(make_power(3), MixedField::zero(g), cfg);
  CHECK_THROWS_AS(one.fixed_point(linear_solution(one.linearization(), rng, 0.2)), ConvergenceError);

  auto w = MixedField(sinsin(g));
  CHECK_THROWS_AS(SolutionMap(make_power(3), w), PreconditionError);
  cfg = FixedPointConfig{};
  cfg.tol = 0;
  CHECK_THROWS_AS(SolutionMap(make_power(3), MixedField::zero(g), cfg), PreconditionError);
}

TEST_CASE("Newton solver") {
  auto g = DomainGrid::square(17);
  auto Q = make_sine(1.0);
  auto z = solve_nonlinear(*Q, ScalarField(g), NavierData::zero(g), MixedField::zero(g));
  CHECK(sup(z.u) == 0.0);

  std::mt19937_64 rng(19);
  ScalarField F = random_smooth(g, rng);
  NavierData bc = boundary_modes(g, rng);
  auto one = solve_nonlinear(*make_zero(), F, bc, MixedField::zero(g));
  CHECK(one.iterations == 1);
  MixedField direct = AssembledOperator::biharmonic(g).solve(F, bc);
  CHECK(sup(one.u - direct) < 1e-12);
}

TEST_CASE("Newton on a manufactured cubic problem") {
  auto Q = make_power(3);
  std::vector<double> err;
  for (int n : {17, 33, 65}) {
    auto g = DomainGrid::square(n);
    ScalarField us = 0.1 * sinsin(g);
    ScalarField F = 4 * std::pow(pi, 4) * us;
    for (std::size_t k = 0; k < g->size(); ++k) F[k] += us[k] * us[k] * us[k];
    NavierData bc{boundary_restriction(us), boundary_restriction(-2 * pi * pi * us)};
    auto res = solve_nonlinear(*Q, F, bc, MixedField::zero(g));
    CHECK(res.residuals.back() < 1e-10);
    CHECK(res.iterations <= 6);
    err.push_back((res.u.u - us).max_abs());
  }
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(observed_order(err[i - 1], err[i]) >= 1.9);
}
