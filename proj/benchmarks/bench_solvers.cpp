#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bilab/cauchy.hpp"
#include "bilab/recovery.hpp"
#include "bilab/second_map.hpp"

using namespace bilab;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField source(const GridPtr& g) {
  return ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
}

MixedField base(const NonlinearityPtr& Q, const GridPtr& g) {
  NavierData bc{BoundaryTrace::from_arclength(g, [](double s) { return 0.3 * std::cos(pi * s / 2); }),
                BoundaryTrace::from_arclength(g, [](double s) { return 0.3 * std::sin(pi * s); })};
  return solve_nonlinear(*Q, ScalarField(g), bc, MixedField::zero(g)).u;
}

}  // namespace

// assembly and factorization of a fresh operator
static void BM_AssembleFactorize(benchmark::State& state) {
  auto g = DomainGrid::square(static_cast<int>(state.range(0)));
  ScalarField F = source(g);
  for (auto _ : state) {
    AssembledOperator op = AssembledOperator::biharmonic(g);
    benchmark::DoNotOptimize(op.solve(F, NavierData::zero(g)));
  }
}
BENCHMARK(BM_AssembleFactorize)->Arg(33)->Arg(65)->Arg(129)->Unit(benchmark::kMillisecond);

// back substitution with a shared factorization
static void BM_Solve(benchmark::State& state) {
  auto g = DomainGrid::square(static_cast<int>(state.range(0)));
  AssembledOperator op = AssembledOperator::biharmonic(g);
  ScalarField F = source(g);
  op.solve(F, NavierData::zero(g));
  for (auto _ : state) benchmark::DoNotOptimize(op.solve(F, NavierData::zero(g)));
}
BENCHMARK(BM_Solve)->Arg(33)->Arg(65)->Arg(129)->Unit(benchmark::kMillisecond);

static void BM_FixedPoint(benchmark::State& state) {
  auto g = DomainGrid::square(static_cast<int>(state.range(0)));
  auto Q = make_power(3);
  SolutionMap S(Q, base(Q, g));
  std::mt19937_64 rng(1);
  MixedField v = random_linear_solution(S, rng, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(S.fixed_point(v));
}
BENCHMARK(BM_FixedPoint)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_ProjectZ(benchmark::State& state) {
  auto g = DomainGrid::square(static_cast<int>(state.range(0)));
  ZProjector P(AssembledOperator::biharmonic(g));
  ScalarField u = source(g);
  P.project(u);
  for (auto _ : state) benchmark::DoNotOptimize(P.project(u));
}
BENCHMARK(BM_ProjectZ)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_SolutionPairs(benchmark::State& state) {
  auto g = DomainGrid::square(33);
  AssembledOperator op = AssembledOperator::biharmonic(g);
  PairConfig pc;
  pc.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_solution_pairs(op, op, 64, 1, pc));
}
BENCHMARK(BM_SolutionPairs)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
