#include "bilab/cauchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "bilab/error.hpp"

namespace bilab {

CauchyData operator+(const CauchyData& a, const CauchyData& b) {
  return {a.u + b.u, a.du_n + b.du_n, a.lap_u + b.lap_u, a.dlap_n + b.dlap_n};
}

CauchyData operator-(const CauchyData& a, const CauchyData& b) {
  return {a.u - b.u, a.du_n - b.du_n, a.lap_u - b.lap_u, a.dlap_n - b.dlap_n};
}

CauchyData operator*(double s, const CauchyData& a) {
  return {s * a.u, s * a.du_n, s * a.lap_u, s * a.dlap_n};
}

CauchyData cauchy_data(const MixedField& u) {
  return {boundary_restriction(u.u), normal_derivative(u.u), boundary_restriction(u.m),
          normal_derivative(u.m)};
}

CauchyData cauchy_data(const ScalarField& u) { return cauchy_data(MixedField(u)); }

double cauchy_norm(const CauchyData& cd) {
  return std::max({cd.u.max_abs(), cd.du_n.max_abs(), cd.lap_u.max_abs(), cd.dlap_n.max_abs()});
}

NavierData random_boundary_modes(const GridPtr& g, std::mt19937_64& rng, int modes) {
  if (modes < 1) throw PreconditionError("random_boundary_modes needs modes >= 1");
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto trace = [&] {
    std::vector<double> a(modes), b(modes);
    for (int l = 0; l < modes; ++l) {
      a[l] = U(rng);
      b[l] = U(rng);
    }
    return BoundaryTrace::from_arclength(g, [a, b, modes](double s) {
      double t = 0.0;
      for (int l = 0; l < modes; ++l) {
        double th = 2 * std::numbers::pi * l * s / 4;
        t += a[l] * std::cos(th) + b[l] * std::sin(th);
      }
      return t;
    });
  };
  BoundaryTrace f0 = trace();
  BoundaryTrace f1 = trace();
  return {std::move(f0), std::move(f1)};
}

MixedField random_linear_solution(const SolutionMap& S, std::mt19937_64& rng, double size, int modes) {
  const GridPtr& g = S.w().grid_ptr();
  MixedField v = S.linearization().solve(ScalarField(g), random_boundary_modes(g, rng, modes));
  double n = c2_norm(v);
  if (!(n > 0)) return v;
  return (size / n) * v;
}

StabilityReport stability_probe(const SolutionMap& S, const StabilityProbeConfig& cfg) {
  if (cfg.n_pairs < 1) throw PreconditionError("stability probe needs n_pairs >= 1");
  if (!(cfg.amplitude > 0)) throw PreconditionError("stability probe needs amplitude > 0");
  StabilityReport rep;
  rep.seed = cfg.seed;
  rep.ratios.assign(cfg.n_pairs, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> skipped(cfg.n_pairs, 0);
  std::vector<std::string> failures(cfg.n_pairs);

  // factorize before sharing the operator
  S.linearization().solve(ScalarField(S.w().grid_ptr()), NavierData::zero(S.w().grid_ptr()));

  auto work = [&](int i) {
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> size(0.2 * cfg.amplitude, cfg.amplitude);
    try {
      MixedField u1 = S.apply(random_linear_solution(S, rng, size(rng), cfg.modes));
      MixedField u2 = S.apply(random_linear_solution(S, rng, size(rng), cfg.modes));
      double cn = cauchy_norm(cauchy_data(u1 - u2));
      if (cn < cfg.degenerate_tol) {
        skipped[i] = 1;
        return;
      }
      rep.ratios[i] = c2_distance(u1, u2) / cn;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, cfg.n_pairs);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < cfg.n_pairs; i += threads) work(i);
    });
  }
  for (auto& th : pool) th.join();

  for (int i = 0; i < cfg.n_pairs; ++i) {
    if (!failures[i].empty()) {
      throw NumericalError("stability probe pair " + std::to_string(i) + ": " + failures[i]);
    }
    if (skipped[i]) {
      ++rep.skipped;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, rep.ratios[i]);
  }
  return rep;
}

CoincidentPair coincident_pair(const SolutionMap& S, const MixedField& v) {
  MixedField u1 = S.apply(v);
  NewtonConfig nc;
  nc.tol = 1e-11;
  MixedField u2 = solve_nonlinear(S.Q(), ScalarField(u1.grid_ptr()), NavierData::of(u1), S.w(), nc).u;
  CoincidentPair out;
  out.cauchy_mismatch = cauchy_norm(cauchy_data(u1 - u2));
  for (std::size_t k : u1.grid().interior_nodes()) {
    out.interior_difference = std::max(out.interior_difference, std::abs(u1.u[k] - u2.u[k]));
  }
  return out;
}

}  // namespace bilab
