#include "bilab/second_map.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "bilab/cauchy.hpp"
#include "bilab/error.hpp"

namespace bilab {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kAlpha = 1e3;

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double max_abs_interior(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t k : f.grid().interior_nodes()) m = std::max(m, std::abs(f[k]));
  return m;
}

}  // namespace

ClampedSpace::ClampedSpace(GridPtr grid, int layers) : grid_(std::move(grid)), layers_(layers) {
  if (!grid_) throw PreconditionError("ClampedSpace needs a grid");
  if (layers_ < 1) throw PreconditionError("ClampedSpace needs layers >= 1");
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    if (grid_->ring(k) >= layers_) free_.push_back(k);
  }
  if (free_.empty()) throw PreconditionError("grid too small for the clamped space");
}

bool ClampedSpace::contains(const ScalarField& y, double tol) const {
  require_same_grid(*grid_, y.grid(), "ClampedSpace::contains");
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    if (grid_->ring(k) < layers_ && std::abs(y[k]) > tol) return false;
  }
  return true;
}

ScalarField ClampedSpace::restrict(const ScalarField& f) const {
  require_same_grid(*grid_, f.grid(), "ClampedSpace::restrict");
  ScalarField out = f;
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    if (grid_->ring(k) < layers_) out[k] = 0.0;
  }
  return out;
}

struct ZProjector::Shared {
  SparseMatrix B;  // interior rows x free columns
  SparseMatrix K;  // augmented system
  double K_norm = 0.0;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  std::once_flag once;
  bool ok = false;
};

ZProjector::ZProjector(AssembledOperator op, int layers)
    : op_(std::move(op)), space_(op_.grid_ptr(), layers), shared_(std::make_shared<Shared>()) {
  const DomainGrid& g = op_.grid();
  const auto& interior = g.interior_nodes();
  std::vector<long> row_of(g.size(), -1), col_of(g.size(), -1);
  for (std::size_t r = 0; r < interior.size(); ++r) row_of[interior[r]] = static_cast<long>(r);
  const auto& free = space_.free_nodes();
  for (std::size_t c = 0; c < free.size(); ++c) col_of[free[c]] = static_cast<long>(c);

  const long n = static_cast<long>(interior.size());
  const long p = static_cast<long>(free.size());
  std::vector<Eigen::Triplet<double>> tb, tk;
  const SparseMatrix& M = op_.reduced_matrix();
  for (int outer = 0; outer < M.outerSize(); ++outer) {
    for (SparseMatrix::InnerIterator it(M, outer); it; ++it) {
      long r = row_of[it.row()];
      long c = col_of[it.col()];
      if (r < 0 || c < 0 || it.value() == 0.0) continue;
      tb.emplace_back(r, c, it.value());
      tk.emplace_back(r, n + c, it.value());
      tk.emplace_back(n + c, r, it.value());
    }
  }
  for (long r = 0; r < n; ++r) tk.emplace_back(r, r, kAlpha);
  shared_->B.resize(n, p);
  shared_->B.setFromTriplets(tb.begin(), tb.end());
  shared_->K.resize(n + p, n + p);
  shared_->K.setFromTriplets(tk.begin(), tk.end());
  Vec rows = Vec::Zero(n + p);
  for (int outer = 0; outer < shared_->K.outerSize(); ++outer)
    for (SparseMatrix::InnerIterator it(shared_->K, outer); it; ++it) rows[it.row()] += std::abs(it.value());
  shared_->K_norm = rows.maxCoeff();
}

ProjectionResult ZProjector::project(const ScalarField& u) const {
  const DomainGrid& g = op_.grid();
  require_same_grid(g, u.grid(), "project_Z");
  if (!u.all_finite()) throw NumericalError("project_Z: non-finite input");
  Shared& s = *shared_;
  std::call_once(s.once, [&] {
    s.lu.analyzePattern(s.K);
    s.lu.factorize(s.K);
    s.ok = s.lu.info() == Eigen::Success;
  });
  if (!s.ok) throw SingularSystemError("projection system is rank deficient (factorization failed)");

  const auto& interior = g.interior_nodes();
  const auto& free = space_.free_nodes();
  const long n = static_cast<long>(interior.size());
  Vec b = Vec::Zero(s.K.rows());
  for (long r = 0; r < n; ++r) b[r] = u[interior[r]];
  Vec x = s.lu.solve(b);
  double res = (s.K * x - b).lpNorm<Eigen::Infinity>();
  double scale = s.K_norm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  if (!x.allFinite() || res > 1e-10 * std::max(scale, 1e-300)) {
    throw SingularSystemError("projection system is rank deficient (relative residual " +
                              fmt(res / std::max(scale, 1e-300)) + ")");
  }
  ProjectionResult out{ScalarField(op_.grid_ptr()), ScalarField(op_.grid_ptr()), 0.0, 0.0};
  for (std::size_t c = 0; c < free.size(); ++c) out.y[free[c]] = x[n + static_cast<long>(c)];
  Vec By = s.B * x.tail(static_cast<long>(free.size()));
  double umax = 0.0;
  for (long r = 0; r < n; ++r) {
    std::size_t k = interior[r];
    out.Pu[k] = By[r];
    out.distance = std::max(out.distance, std::abs(u[k] - By[r]));
    umax = std::max(umax, std::abs(u[k]));
  }
  out.relative_distance = umax > 0 ? out.distance / umax : 0.0;
  return out;
}

ScalarField ZProjector::inverse(const ScalarField& z, double tol) const {
  ProjectionResult p = project(z);
  if (p.relative_distance > tol) {
    throw PreconditionError("inverse_on_Z: field is not in Z (relative distance " +
                            fmt(p.relative_distance) + " > " + fmt(tol) + ")");
  }
  return p.y;
}

ProjectionResult project_Z(const AssembledOperator& op, const ScalarField& u) {
  return ZProjector(op).project(u);
}

ScalarField inverse_on_Z(const AssembledOperator& op, const ScalarField& z) {
  return ZProjector(op).inverse(z);
}

void SecondMapConfig::validate() const {
  if (!(tol > 0)) throw PreconditionError("second map tol must be > 0");
  if (max_iter < 1) throw PreconditionError("second map max_iter must be >= 1");
  if (!(cauchy_tol > 0) || !(coeff_tol > 0) || !(divergence_cap > 0)) {
    throw PreconditionError("second map tolerances must be > 0");
  }
}

SecondSolutionMap::SecondSolutionMap(SolutionMap S1, NonlinearityPtr Q2, MixedField w2,
                                     SecondMapConfig cfg)
    : S1_(std::move(S1)), Q2_(std::move(Q2)), w2_(std::move(w2)), cfg_(cfg),
      c2_(linearized_coeffs(*Q2_, w2_)), proj_(AssembledOperator(c2_), cfg.layers),
      base_mismatch_(cauchy_norm(cauchy_data(S1_.w()) - cauchy_data(w2_))) {
  cfg_.validate();
  require_same_grid(S1_.w().grid(), w2_.grid(), "second map");
  double res = max_abs_interior(nonlinear_residual(*Q2_, w2_));
  if (res > S1_.config().base_tol) {
    throw PreconditionError("w2 does not solve the Q2 equation (residual " + fmt(res) + ")");
  }
  if (base_mismatch_ > cfg_.cauchy_tol) {
    throw PreconditionError("w1 and w2 have different Cauchy data (mismatch " + fmt(base_mismatch_) + ")");
  }
}

double SecondSolutionMap::coefficient_gap() const {
  const LinearizedCoefficients& c1 = S1_.coefficients();
  return std::max({(c1.A - c2_.A).max_abs(), (c1.X.x() - c2_.X.x()).max_abs(),
                   (c1.X.y() - c2_.X.y()).max_abs(), (c1.V - c2_.V).max_abs()});
}

SecondMapResult SecondSolutionMap::apply(const MixedField& v) const {
  SecondMapResult out;
  out.u1 = S1_.apply(v);
  ScalarField Q1u1 = eval_Q(S1_.Q(), out.u1);
  ScalarField r = proj_.space().restrict(S1_.w().u - w2_.u);
  for (int it = 1; it <= cfg_.max_iter; ++it) {
    MixedField R(r);
    ScalarField f = apply_linear_part(c2_, R) + eval_Q(*Q2_, out.u1 - R) - Q1u1;
    ProjectionResult p = proj_.project(f);
    double inc = (p.y - r).max_abs();
    out.increments.push_back(inc);
    out.z_distance = p.distance;
    r = std::move(p.y);
    out.iterations = it;
    if (!std::isfinite(inc) || r.max_abs() > cfg_.divergence_cap) {
      throw ContractionError("second map iteration diverged at step " + std::to_string(it));
    }
    if (inc < cfg_.tol) {
      out.converged = true;
      break;
    }
  }
  MixedField R(r);
  out.u2 = out.u1 - R;
  out.r = std::move(r);
  out.cauchy_defect = cauchy_norm(cauchy_data(out.u2) - cauchy_data(out.u1));
  out.q2_residual = max_abs_interior(nonlinear_residual(*Q2_, out.u2));
  return out;
}

double SecondSolutionMap::dT_identity_check(const MixedField& h, double eps) const {
  if (!(eps > 0)) throw PreconditionError("dT check needs eps > 0");
  double gap = coefficient_gap();
  if (gap > cfg_.coeff_tol) {
    throw PreconditionError("dT check needs equal linearizations (coefficient gap " + fmt(gap) + ")");
  }
  SecondMapResult plus = apply(eps * h);
  SecondMapResult minus = apply(-eps * h);
  MixedField d = (1.0 / (2 * eps)) * (plus.u2 - minus.u2) - h;
  return std::max(d.u.max_abs(), d.m.max_abs());
}

}  // namespace bilab
