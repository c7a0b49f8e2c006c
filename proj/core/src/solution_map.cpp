#include "bilab/solution_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bilab/error.hpp"

namespace bilab {

void FixedPointConfig::validate() const {
  if (!(tol > 0)) throw PreconditionError("fixed point tol must be > 0");
  if (max_iter < 1) throw PreconditionError("fixed point max_iter must be >= 1");
  if (!(delta_cap > 0)) throw PreconditionError("delta_cap must be > 0");
  if (quad_nodes < 2) throw PreconditionError("quad_nodes must be >= 2");
  if (!(base_tol > 0)) throw PreconditionError("base_tol must be > 0");
}

ScalarField nonlinear_residual(const Nonlinearity& Q, const MixedField& u, const ScalarField& F) {
  const DomainGrid& g = u.grid();
  ScalarField out(u.grid_ptr());
  for (std::size_t k : g.interior_nodes()) {
    int i = g.i_of(k);
    int j = g.j_of(k);
    double lap_m = second_difference(u.m, i, j, Axis::x) + second_difference(u.m, i, j, Axis::y);
    out[k] = lap_m + Q.value(site_at(g, k), jet_at(u, k)) - F[k];
  }
  if (!out.all_finite()) throw NumericalError("nonlinear residual is not finite");
  return out;
}

ScalarField nonlinear_residual(const Nonlinearity& Q, const MixedField& u) {
  return nonlinear_residual(Q, u, ScalarField(u.grid_ptr()));
}

namespace {

double sup_diff(const MixedField& a, const MixedField& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.u.size(); ++k) {
    d = std::max({d, std::abs(a.u[k] - b.u[k]), std::abs(a.m[k] - b.m[k])});
  }
  return d;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

SolutionMap::SolutionMap(NonlinearityPtr Q, MixedField w, FixedPointConfig cfg)
    : Q_(std::move(Q)), w_(std::move(w)), cfg_(cfg), coeffs_(linearized_coeffs(*Q_, w_)),
      op_(coeffs_), base_residual_(nonlinear_residual(*Q_, w_).max_abs()) {
  cfg_.validate();
  if (base_residual_ > cfg_.base_tol) {
    throw PreconditionError("base field does not solve the nonlinear equation: residual " +
                            fmt(base_residual_) + " > " + fmt(cfg_.base_tol));
  }
}

FixedPointResult SolutionMap::fixed_point(const MixedField& v) const {
  require_same_grid(w_.grid(), v.grid(), "fixed_point");
  double vn = c2_norm(v);
  if (vn > cfg_.delta_cap) {
    throw ContractionError("contraction ball exceeded; shrink v (c2 norm " + fmt(vn) +
                           " > delta_cap " + fmt(cfg_.delta_cap) + ")");
  }
  const GridPtr& g = w_.grid_ptr();
  NavierData zero = NavierData::zero(g);
  FixedPointResult res{MixedField::zero(g), 0, {}, {}};
  for (int it = 1; it <= cfg_.max_iter; ++it) {
    ScalarField R = remainder_R(*Q_, w_, v + res.r, cfg_.quad_nodes);
    MixedField next = op_.solve(-1.0 * R, zero);
    double inc = sup_diff(next, res.r);
    double nn = c2_norm(next);
    res.increments.push_back(inc);
    res.norms.push_back(nn);
    res.r = std::move(next);
    res.iterations = it;
    if (!std::isfinite(nn) || nn > cfg_.delta_cap) {
      throw ContractionError("contraction ball exceeded; shrink v (iterate " + std::to_string(it) +
                             " has c2 norm " + fmt(nn) + ")");
    }
    if (inc < cfg_.tol) return res;
  }
  throw ConvergenceError("fixed point did not converge in " + std::to_string(cfg_.max_iter) +
                         " iterations (last increment " + fmt(res.increments.back()) + ")");
}

MixedField SolutionMap::apply(const MixedField& v) const { return w_ + v + fixed_point(v).r; }

MixedField SolutionMap::converse(const MixedField& u) const {
  require_same_grid(w_.grid(), u.grid(), "converse");
  double res = nonlinear_residual(*Q_, u).max_abs();
  if (res > cfg_.base_tol) {
    throw PreconditionError("converse: u does not solve the nonlinear equation (residual " +
                            fmt(res) + ")");
  }
  MixedField d = u - w_;
  double dn = c2_norm(d);
  if (dn > cfg_.delta_cap) {
    throw ContractionError("converse: u - w outside the contraction ball (c2 norm " + fmt(dn) + ")");
  }
  return op_.solve(ScalarField(w_.grid_ptr()), NavierData::of(d));
}

MixedField SolutionMap::directional_derivative(const MixedField& v, const MixedField& h,
                                               double eps) const {
  if (!(eps > 0)) throw PreconditionError("directional derivative needs eps > 0");
  MixedField plus = apply(v + eps * h);
  MixedField minus = apply(v - eps * h);
  return (1.0 / (2 * eps)) * (plus - minus);
}

ScalarField SolutionMap::equation_residual(const MixedField& v, const MixedField& u) const {
  return nonlinear_residual(*Q_, u, op_.apply(v));
}

NewtonResult solve_nonlinear(const Nonlinearity& Q, const ScalarField& F, const NavierData& bc,
                             const MixedField& u0, const NewtonConfig& cfg) {
  if (!(cfg.tol > 0) || cfg.max_iter < 1) throw PreconditionError("invalid Newton configuration");
  NewtonResult out{u0, 0, {}};
  for (int it = 0; it <= cfg.max_iter; ++it) {
    ScalarField res = nonlinear_residual(Q, out.u, F);
    double bc_gap = std::max((bc.f0 - boundary_restriction(out.u.u)).max_abs(),
                             (bc.f1 - boundary_restriction(out.u.m)).max_abs());
    double rn = res.max_abs();
    out.residuals.push_back(rn);
    if (rn < cfg.tol && bc_gap < cfg.tol && it > 0) return out;
    if (it == cfg.max_iter) break;
    if (!std::isfinite(rn) || (it > 3 && rn > 1e6 * out.residuals.front() + 1.0)) {
      throw ConvergenceError("Newton iteration diverged (residual " + fmt(rn) + ")");
    }
    AssembledOperator lin(linearized_coeffs(Q, out.u));
    NavierData gap{bc.f0 - boundary_restriction(out.u.u), bc.f1 - boundary_restriction(out.u.m)};
    MixedField step = lin.solve(-1.0 * res, gap);
    out.u += step;
    out.iterations = it + 1;
  }
  throw ConvergenceError("Newton iteration did not reach tol " + fmt(cfg.tol) + " in " +
                         std::to_string(cfg.max_iter) + " steps (residual " +
                         fmt(out.residuals.back()) + ")");
}

}  // namespace bilab
