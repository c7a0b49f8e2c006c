#include "bilab/cauchy.hpp"
#include "bilab/error.hpp"
#include "bilab/gauge.hpp"
#include "bilab/recovery.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace testing_support;

namespace {

struct Coeffs {
  ScalarField A;
  VectorField X;
  ScalarField V;
};

Coeffs base_coeffs(const GridPtr& g) {
  return {ScalarField::from_function(g, [](double x, double y) { return 0.3 * std::cos(x + 2 * y); }),
          VectorField(ScalarField::from_function(g, [](double x, double) { return 0.5 + x; }),
                      ScalarField::from_function(g, [](double, double y) { return -0.5 * y * y; })),
          ScalarField::from_function(g, [](double x, double y) { return 1.0 + x * y; })};
}

AssembledOperator make_op(const Coeffs& c) { return AssembledOperator(c.A.grid_ptr(), c.A, c.X, c.V); }

ScalarField broad_bump(const GridPtr& g) {
  return ScalarField::from_function(g, [](double x, double y) {
    return 0.5 * std::exp(-((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)) / 0.2);
  });
}

MixedField base_solution(const NonlinearityPtr& Q, const GridPtr& g, double size) {
  NavierData bc{BoundaryTrace::from_arclength(g, [=](double s) { return size * std::cos(pi * s / 2); }),
                BoundaryTrace::from_arclength(g, [=](double s) { return size * std::sin(pi * s); })};
  return solve_nonlinear(*Q, ScalarField(g), bc, MixedField::zero(g)).u;
}

}  // namespace

TEST_CASE("Chebyshev basis ordering") {
  auto idx = chebyshev_indices(9);
  std::vector<std::array<int, 2>> expect{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 2}, {2, 0}, {1, 2}, {2, 1}, {2, 2}};
  CHECK(idx == expect);
  CHECK(chebyshev_indices(16).back() == std::array<int, 2>{3, 3});
  CHECK(chebyshev_indices(1).size() == 1u);
  CHECK(chebyshev_tensor(2, 3, 0.3, 0.8) == doctest::Approx(std::cos(2 * std::acos(-0.4)) * std::cos(3 * std::acos(0.6))));
  CHECK_THROWS_AS(chebyshev_indices(0), PreconditionError);
}

TEST_CASE("solution pairs") {
  auto g = DomainGrid::square(33);
  Coeffs c = base_coeffs(g);
  auto op1 = make_op(c);
  Coeffs c2 = c;
  c2.V += ScalarField(g, 0.5);
  auto op2 = make_op(c2);
  CHECK(generate_solution_pairs(op1, op2, 0, 1).empty());
  auto pairs = generate_solution_pairs(op1, op2, 6, 1);
  for (const auto& p : pairs) {
    CHECK(max_abs_interior(op1.apply(p.v1)) < 1e-9);
    CHECK(max_abs_interior(op2.apply(p.u2)) < 1e-9);
    CHECK(cauchy_norm(cauchy_data(p.v1)) > 0);
    // adjoint state: sum_int v2 (L2 z) = sum F z for zero-Navier z
    MixedField z = op2.solve(ScalarField(g, 1.0), NavierData::zero(g));
    ScalarField Lz = op2.apply(z);
    double a = 0, b = 0;
    for (std::size_t k : g->interior_nodes()) a += p.v2[k] * Lz[k];
    for (std::size_t k = 0; k < g->size(); ++k) b += p.F[k] * z.u[k];
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
    for (std::size_t k = 0; k < g->size(); ++k) {
      if (g->ring(k) == 0 || g->ring(k) > 2) CHECK(p.F[k] == 0.0);
    }
  }
  // deterministic under reordering of the work
  PairConfig one;
  one.threads = 1;
  auto again = generate_solution_pairs(op1, op2, 6, 1, one);
  for (int i = 0; i < 6; ++i) CHECK((again[i].v2 - pairs[i].v2).max_abs() == 0.0);
  CHECK(identity_defect(pairs, op1, op2) < 1e-7);
}

TEST_CASE("identity rows against brute-force sums") {
  auto g = DomainGrid::square(17);
  Coeffs c = base_coeffs(g);
  auto op = make_op(c);
  auto pairs = generate_solution_pairs(op, op, 3, 2);
  auto sys = assemble_identity_system(pairs, 4);
  CHECK(sys.n_rows() == 3);
  CHECK(sys.n_cols() == 16);
  // identical operators: the measured difference vanishes
  CHECK(sys.rhs.lpNorm<Eigen::Infinity>() == 0.0);
  for (int p = 0; p < 3; ++p) {
    const auto& sp = pairs[p];
    for (int col = 0; col < 4; ++col) {
      auto ij = sys.indices[col];
      double s[4] = {0, 0, 0, 0};
      for (int j = 1; j < 16; ++j) {
        for (int i = 1; i < 16; ++i) {
          std::size_t k = g->index(i, j);
          double x = i / 16.0, y = j / 16.0;
          double b = std::cos(ij[0] * std::acos(2 * x - 1)) * std::cos(ij[1] * std::acos(2 * y - 1));
          double dx = (sp.v1.u[k + 1] - sp.v1.u[k - 1]) * 8.0;
          double dy = (sp.v1.u[k + 17] - sp.v1.u[k - 17]) * 8.0;
          s[0] += sp.v2[k] * sp.v1.m[k] * b;
          s[1] += sp.v2[k] * dx * b;
          s[2] += sp.v2[k] * dy * b;
          s[3] += sp.v2[k] * sp.v1.u[k] * b;
        }
      }
      for (int f = 0; f < 4; ++f) {
        CHECK(sys.rows(p, f * 4 + col) == doctest::Approx(s[f]).epsilon(1e-12));
      }
    }
  }
  // K = 1 gives the plain products
  auto s1 = assemble_identity_system(pairs, 1);
  double lap = 0;
  for (std::size_t k : g->interior_nodes()) lap += pairs[0].v1.m[k] * pairs[0].v2[k];
  CHECK(s1.rows(0, 0) == doctest::Approx(lap).epsilon(1e-12));
}

TEST_CASE("homogeneous system recovers zero") {
  auto g = DomainGrid::square(33);
  auto op = make_op(base_coeffs(g));
  auto pairs = generate_solution_pairs(op, op, 60, 3);
  auto sys = assemble_identity_system(pairs, 16);
  CHECK(sys.rhs.lpNorm<Eigen::Infinity>() <= 1e-10);
  auto rec = recover_coefficient_difference(sys, g);
  CHECK(rec.a.max_abs() < 1e-6);
  CHECK(rec.b.max_abs() < 1e-6);
  CHECK(rec.c.max_abs() < 1e-6);
  CHECK(std::isfinite(rec.condition));
  CHECK_THROWS_AS(recover_coefficient_difference(assemble_identity_system(pairs, 25), g), PreconditionError);
}

TEST_CASE("constant potential shift is recovered") {
  auto g = DomainGrid::square(33);
  Coeffs c = base_coeffs(g);
  auto op1 = make_op(c);
  c.V += ScalarField(g, 0.5);
  auto op2 = make_op(c);
  auto pairs = generate_solution_pairs(op1, op2, 200, 4);
  auto rec = recover_coefficient_difference(assemble_identity_system(pairs, 16), g);
  ScalarField truth(g, -0.5);
  CHECK(relative_l2_error(rec.c, truth) < 0.1);
  CHECK(rec.a.max_abs() < 0.05);
  CHECK(rec.rhs_norm > 0);
}

TEST_CASE("recovery error does not grow with more pairs") {
  auto g = DomainGrid::square(33);
  Coeffs c = base_coeffs(g);
  auto op1 = make_op(c);
  c.V += ScalarField(g, 0.5);
  auto op2 = make_op(c);
  auto pairs = generate_solution_pairs(op1, op2, 200, 5);
  ScalarField truth(g, -0.5);
  double prev = 1e300;
  for (int n : {25, 50, 100, 200}) {
    std::vector<SolutionPair> sub(pairs.begin(), pairs.begin() + n);
    double e = relative_l2_error(recover_coefficient_difference(assemble_identity_system(sub, 8), g).c, truth);
    CHECK(e <= prev * 1.0001);
    prev = e;
  }
}

TEST_CASE("smooth bump in the Laplacian coefficient") {
  auto g = DomainGrid::square(33);
  Coeffs c = base_coeffs(g);
  auto op1 = make_op(c);
  ScalarField bump = broad_bump(g);
  c.A += bump;
  auto op2 = make_op(c);
  auto pairs = generate_solution_pairs(op1, op2, 200, 6);
  auto rec = recover_coefficient_difference(assemble_identity_system(pairs, 16), g);
  CHECK(relative_l2_error(rec.a, -1.0 * bump) < 0.15);
}

TEST_CASE("phi independence") {
  auto g = DomainGrid::square(33);
  auto Q1 = make_power(3);
  MixedField w1 = base_solution(Q1, g, 0.3);
  SolutionMap S(Q1, w1);
  std::mt19937_64 rng(51);
  std::vector<MixedField> vs{MixedField::zero(g)};
  for (int i = 0; i < 3; ++i) vs.push_back(random_linear_solution(S, rng, 0.1));

  SecondSolutionMap same(S, Q1, w1);
  auto r0 = phi_independence_check(same, vs);
  CHECK(r0.max_deviation < 1e-12);
  CHECK(phi_independence_check(same, {vs[2]}).max_deviation == 0.0);

  ScalarField phi = radial_bump(g, 0.05);
  SecondSolutionMap gauge(S, gauge_transform(Q1, -1.0 * phi), w1 + MixedField(phi));
  auto r1 = phi_independence_check(gauge, vs);
  CHECK(r1.max_deviation < 1e-6);
  CHECK(r1.max_coefficient_gap < 1e-8);

  SecondSolutionMap other(SolutionMap(make_zero(), MixedField::zero(g)), make_power(3), MixedField::zero(g));
  CHECK_THROWS_AS(phi_independence_check(other, {random_linear_solution(S, rng, 0.3)}), PreconditionError);
}

TEST_CASE("reachable sweep") {
  auto g = DomainGrid::square(33);
  auto Q = make_power(3);
  SolutionMap S(Q, MixedField::zero(g));
  SweepConfig cfg;
  cfg.n_lambda = 5;
  std::vector<std::array<double, 2>> pts{{0.5, 0.5}, {0.3, 0.7}};
  auto res = reachable_sweep(S, Q, ScalarField(g), pts, cfg);
  CHECK(res.skipped == 0);
  CHECK(res.records.size() == 10u);
  CHECK(res.max_root_error < 1e-8);
  CHECK(res.max_residual < 1e-6);
  for (const auto& p : res.points) {
    CHECK(p.epsilon > 0);
    CHECK(p.control_miss < 1e-6);
  }
  // lambda = 0 reaches the base jet at t = 0
  const auto& mid = res.records[2];
  CHECK(mid.lambda == 0.0);
  CHECK(mid.t == 0.0);
  CHECK(mid.jet == jet_at(S.w(), mid.node));

  // gauge pair around a nonzero base
  MixedField w1 = base_solution(Q, g, 0.3);
  SolutionMap S1(Q, w1);
  ScalarField phi = radial_bump(g, 0.05);
  auto Q2 = gauge_transform(Q, -1.0 * phi);
  SecondSolutionMap T(S1, Q2, w1 + MixedField(phi));
  ScalarField phi_hat = T.apply(MixedField::zero(g)).u2.u - w1.u;
  CHECK((phi_hat - phi).max_abs() < 1e-12);
  auto gres = reachable_sweep(S1, Q2, phi_hat, pts, cfg);
  CHECK(gres.skipped == 0);
  CHECK(gres.max_root_error < 1e-8);
  CHECK(gres.max_residual < 1e-5);
  // a wrong gauge is detected
  auto bad = reachable_sweep(S1, Q2, ScalarField(g), pts, cfg);
  CHECK(bad.max_residual > 1e-3);
}
