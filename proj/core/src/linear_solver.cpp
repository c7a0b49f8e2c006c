#include "bilab/linear_solver.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <mutex>
#include <sstream>

#include <Eigen/SparseLU>

#include "bilab/error.hpp"

namespace bilab {

using SparseMatrix = AssembledOperator::SparseMatrix;
using Triplet = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

NavierData NavierData::zero(const GridPtr& grid) { return {BoundaryTrace(grid), BoundaryTrace(grid)}; }

NavierData NavierData::of(const MixedField& f) {
  return {boundary_restriction(f.u), boundary_restriction(f.m)};
}

NavierData operator+(const NavierData& a, const NavierData& b) { return {a.f0 + b.f0, a.f1 + b.f1}; }
NavierData operator-(const NavierData& a, const NavierData& b) { return {a.f0 - b.f0, a.f1 - b.f1}; }
NavierData operator*(double s, const NavierData& a) { return {s * a.f0, s * a.f1}; }

namespace {

// Coefficients of the axis stencil at position p of n nodes: offsets and weights.
struct Stencil {
  int off[4];
  double w[4];
  int len;
};

Stencil second_stencil(int p, int n, double h) {
  double inv = 1.0 / (h * h);
  if (p == 0) return {{0, 1, 2, 3}, {2 * inv, -5 * inv, 4 * inv, -inv}, 4};
  if (p == n - 1) return {{0, -1, -2, -3}, {2 * inv, -5 * inv, 4 * inv, -inv}, 4};
  return {{-1, 0, 1, 0}, {inv, -2 * inv, inv, 0}, 3};
}

Stencil first_stencil(int p, int n, double h) {
  double inv = 1.0 / (2 * h);
  if (p == 0) return {{0, 1, 2, 0}, {-3 * inv, 4 * inv, -inv, 0}, 3};
  if (p == n - 1) return {{0, -1, -2, 0}, {3 * inv, -4 * inv, inv, 0}, 3};
  return {{-1, 1, 0, 0}, {-inv, inv, 0, 0}, 2};
}

void add_stencil(std::vector<Triplet>& t, const DomainGrid& g, long row, long col_offset, int i,
                 int j, Axis axis, const Stencil& s, double scale) {
  for (int q = 0; q < s.len; ++q) {
    int ii = axis == Axis::x ? i + s.off[q] : i;
    int jj = axis == Axis::y ? j + s.off[q] : j;
    t.emplace_back(row, col_offset + static_cast<long>(g.index(ii, jj)), scale * s.w[q]);
  }
}

void add_laplacian(std::vector<Triplet>& t, const DomainGrid& g, long row, long col_offset, int i,
                   int j, double scale) {
  add_stencil(t, g, row, col_offset, i, j, Axis::x, second_stencil(i, g.nx(), g.hx()), scale);
  add_stencil(t, g, row, col_offset, i, j, Axis::y, second_stencil(j, g.ny(), g.hy()), scale);
}

void add_first(std::vector<Triplet>& t, const DomainGrid& g, long row, long col_offset, int i, int j,
               Axis axis, double scale) {
  int p = axis == Axis::x ? i : j;
  int n = axis == Axis::x ? g.nx() : g.ny();
  double h = axis == Axis::x ? g.hx() : g.hy();
  add_stencil(t, g, row, col_offset, i, j, axis, first_stencil(p, n, h), scale);
}

double inf_norm(const SparseMatrix& M) {
  Vec rows = Vec::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

void check_finite_field(const ScalarField& f, const char* what) {
  if (!f.all_finite()) throw NumericalError(std::string(what) + ": non-finite input");
}

}  // namespace

SparseMatrix laplacian_matrix(const DomainGrid& g) {
  std::vector<Triplet> t;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) add_laplacian(t, g, static_cast<long>(g.index(i, j)), 0, i, j, 1.0);
  }
  SparseMatrix M(g.size(), g.size());
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

SparseMatrix partial_matrix(const DomainGrid& g, Axis axis) {
  std::vector<Triplet> t;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) add_first(t, g, static_cast<long>(g.index(i, j)), 0, i, j, axis, 1.0);
  }
  SparseMatrix M(g.size(), g.size());
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

struct AssembledOperator::Shared {
  SparseMatrix system;
  SparseMatrix reduced;
  double system_norm = 0.0;

  std::once_flag lu_once;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool lu_ok = false;

  std::once_flag adj_once;
  SparseMatrix formal;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> formal_lu;
  bool formal_ok = false;
};

AssembledOperator::AssembledOperator(GridPtr grid, ScalarField A, VectorField X, ScalarField V)
    : grid_(std::move(grid)), A_(std::move(A)), X_(std::move(X)), V_(std::move(V)),
      shared_(std::make_shared<Shared>()) {
  const DomainGrid& g = *grid_;
  require_same_grid(g, A_.grid(), "assemble A");
  require_same_grid(g, X_.grid(), "assemble X");
  require_same_grid(g, V_.grid(), "assemble V");
  if (!A_.all_finite() || !X_.x().all_finite() || !X_.y().all_finite() || !V_.all_finite()) {
    throw NumericalError("assemble: non-finite coefficient field");
  }
  const long N = static_cast<long>(g.size());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(N) * 20);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      long k = static_cast<long>(g.index(i, j));
      if (g.is_boundary(i, j)) {
        t.emplace_back(k, k, 1.0);
        t.emplace_back(N + k, N + k, 1.0);
        continue;
      }
      add_laplacian(t, g, k, 0, i, j, 1.0);
      t.emplace_back(k, N + k, -1.0);
      add_laplacian(t, g, N + k, N, i, j, 1.0);
      t.emplace_back(N + k, N + k, A_[k]);
      add_first(t, g, N + k, 0, i, j, Axis::x, X_.x()[k]);
      add_first(t, g, N + k, 0, i, j, Axis::y, X_.y()[k]);
      t.emplace_back(N + k, k, V_[k]);
    }
  }
  shared_->system.resize(2 * N, 2 * N);
  shared_->system.setFromTriplets(t.begin(), t.end());
  shared_->system.makeCompressed();
  shared_->system_norm = inf_norm(shared_->system);

  SparseMatrix D2 = laplacian_matrix(g);
  SparseMatrix Dx = partial_matrix(g, Axis::x);
  SparseMatrix Dy = partial_matrix(g, Axis::y);
  Vec mask(N);
  Vec a(N), x1(N), x2(N), v(N);
  for (long k = 0; k < N; ++k) {
    mask[k] = g.is_boundary(static_cast<std::size_t>(k)) ? 0.0 : 1.0;
    a[k] = A_[k];
    x1[k] = X_.x()[k];
    x2[k] = X_.y()[k];
    v[k] = V_[k];
  }
  SparseMatrix I(N, N);
  I.setIdentity();
  SparseMatrix L = D2 * D2;
  L += a.asDiagonal() * D2;
  L += x1.asDiagonal() * Dx;
  L += x2.asDiagonal() * Dy;
  L += SparseMatrix(v.asDiagonal() * I);
  shared_->reduced = mask.asDiagonal() * L;
  shared_->reduced.prune(0.0);
  shared_->reduced.makeCompressed();
}

AssembledOperator::AssembledOperator(const LinearizedCoefficients& c)
    : AssembledOperator(c.A.grid_ptr(), c.A, c.X, c.V) {}

AssembledOperator AssembledOperator::biharmonic(const GridPtr& grid) {
  return AssembledOperator(grid, ScalarField(grid), VectorField(grid), ScalarField(grid));
}

const SparseMatrix& AssembledOperator::system_matrix() const { return shared_->system; }
const SparseMatrix& AssembledOperator::reduced_matrix() const { return shared_->reduced; }

namespace {

constexpr double kConditionLimit = 1e13;

void factor_or_throw(Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>& lu,
                     const SparseMatrix& M, bool& ok) {
  lu.analyzePattern(M);
  lu.factorize(M);
  ok = lu.info() == Eigen::Success;
  if (!ok) return;
  // Lower bound on the condition number from one solve with a fixed
  // pseudo-random right-hand side.
  Vec b(M.rows());
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (long i = 0; i < b.size(); ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    b[i] = (state >> 63) ? 1.0 : -1.0;
  }
  Vec x = lu.solve(b);
  double est = inf_norm(M) * x.lpNorm<Eigen::Infinity>();
  ok = x.allFinite() && est < kConditionLimit;
}

void check_residual(const SparseMatrix& M, double norm, const Vec& x, const Vec& b, const char* what) {
  double res = (M * x - b).lpNorm<Eigen::Infinity>();
  double scale = norm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  if (!x.allFinite() || res > AssembledOperator::kResidualTolerance * std::max(scale, 1e-300)) {
    if (scale == 0.0 && res == 0.0) return;
    std::ostringstream os;
    os << what << ": relative residual " << res / std::max(scale, 1e-300)
       << " exceeds tolerance; 0 is (numerically) a Navier eigenvalue";
    throw SingularSystemError(os.str());
  }
}

}  // namespace

MixedField AssembledOperator::solve(const ScalarField& F, const NavierData& bc) const {
  const DomainGrid& g = *grid_;
  require_same_grid(g, F.grid(), "solve_navier source");
  require_same_grid(g, bc.f0.grid(), "solve_navier f0");
  require_same_grid(g, bc.f1.grid(), "solve_navier f1");
  check_finite_field(F, "solve_navier");
  std::call_once(shared_->lu_once, [&] { factor_or_throw(shared_->lu, shared_->system, shared_->lu_ok); });
  if (!shared_->lu_ok) {
    throw SingularSystemError("factorization failed: 0 is (numerically) a Navier eigenvalue");
  }
  const long N = static_cast<long>(g.size());
  Vec b = Vec::Zero(2 * N);
  for (std::size_t s = 0; s < g.boundary_size(); ++s) {
    long k = static_cast<long>(g.boundary_nodes()[s]);
    b[k] = bc.f0[s];
    b[N + k] = bc.f1[s];
  }
  for (std::size_t k : g.interior_nodes()) b[N + static_cast<long>(k)] = F[k];
  if (!b.allFinite()) throw NumericalError("solve_navier: non-finite boundary data");
  Vec x = shared_->lu.solve(b);
  check_residual(shared_->system, shared_->system_norm, x, b, "solve_navier");
  MixedField out = MixedField::zero(grid_);
  for (long k = 0; k < N; ++k) {
    out.u[k] = x[k];
    out.m[k] = x[N + k];
  }
  return out;
}

ScalarField AssembledOperator::apply(const MixedField& u) const {
  const DomainGrid& g = *grid_;
  require_same_grid(g, u.grid(), "apply_L");
  ScalarField out(grid_);
  for (std::size_t k : g.interior_nodes()) {
    int i = g.i_of(k);
    int j = g.j_of(k);
    double lap_m = second_difference(u.m, i, j, Axis::x) + second_difference(u.m, i, j, Axis::y);
    out[k] = lap_m + A_[k] * u.m[k] + X_.x()[k] * first_difference(u.u, i, j, Axis::x) +
             X_.y()[k] * first_difference(u.u, i, j, Axis::y) + V_[k] * u.u[k];
  }
  return out;
}

ScalarField AssembledOperator::apply(const ScalarField& u) const { return apply(MixedField(u)); }

ScalarField AssembledOperator::apply_transpose(const ScalarField& y) const {
  require_same_grid(*grid_, y.grid(), "apply_transpose");
  Eigen::Map<const Vec> yv(y.values().data(), static_cast<long>(y.size()));
  Vec r = shared_->reduced.transpose() * yv;
  return ScalarField(grid_, std::vector<double>(r.data(), r.data() + r.size()));
}

ScalarField AssembledOperator::solve_adjoint(const ScalarField& F) const {
  const DomainGrid& g = *grid_;
  require_same_grid(g, F.grid(), "solve_adjoint");
  check_finite_field(F, "solve_adjoint");
  std::call_once(shared_->lu_once, [&] { factor_or_throw(shared_->lu, shared_->system, shared_->lu_ok); });
  if (!shared_->lu_ok) {
    throw SingularSystemError("factorization failed: 0 is (numerically) a Navier eigenvalue");
  }
  const long N = static_cast<long>(g.size());
  Vec c = Vec::Zero(2 * N);
  for (long k = 0; k < N; ++k) c[k] = F[k];
  Vec y = shared_->lu.transpose().solve(c);
  SparseMatrix Mt = shared_->system.transpose();
  check_residual(Mt, shared_->system_norm, y, c, "solve_adjoint");
  ScalarField out(grid_);
  for (std::size_t k : g.interior_nodes()) out[k] = y[N + static_cast<long>(k)];
  return out;
}

ScalarField AssembledOperator::solve_formal_adjoint(const ScalarField& F) const {
  const DomainGrid& g = *grid_;
  require_same_grid(g, F.grid(), "solve_formal_adjoint");
  const long N = static_cast<long>(g.size());
  std::call_once(shared_->adj_once, [&] {
    std::vector<Triplet> t;
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        long k = static_cast<long>(g.index(i, j));
        if (g.is_boundary(i, j)) {
          t.emplace_back(k, k, 1.0);
          t.emplace_back(N + k, N + k, 1.0);
          continue;
        }
        // mu = Lap v + A v
        add_laplacian(t, g, k, 0, i, j, 1.0);
        t.emplace_back(k, k, A_[k]);
        t.emplace_back(k, N + k, -1.0);
        // Lap mu - div(X v) + V v = F
        add_laplacian(t, g, N + k, N, i, j, 1.0);
        int ci[2] = {i, j};
        for (Axis ax : {Axis::x, Axis::y}) {
          int p = ax == Axis::x ? ci[0] : ci[1];
          int n = ax == Axis::x ? g.nx() : g.ny();
          double h = ax == Axis::x ? g.hx() : g.hy();
          Stencil s = first_stencil(p, n, h);
          const ScalarField& Xc = X_.component(ax);
          for (int q = 0; q < s.len; ++q) {
            int ii = ax == Axis::x ? i + s.off[q] : i;
            int jj = ax == Axis::y ? j + s.off[q] : j;
            std::size_t col = g.index(ii, jj);
            t.emplace_back(N + k, static_cast<long>(col), -s.w[q] * Xc[col]);
          }
        }
        t.emplace_back(N + k, k, V_[k]);
      }
    }
    shared_->formal.resize(2 * N, 2 * N);
    shared_->formal.setFromTriplets(t.begin(), t.end());
    factor_or_throw(shared_->formal_lu, shared_->formal, shared_->formal_ok);
  });
  if (!shared_->formal_ok) throw SingularSystemError("formal adjoint factorization failed");
  Vec b = Vec::Zero(2 * N);
  for (std::size_t k : g.interior_nodes()) b[N + static_cast<long>(k)] = F[k];
  Vec x = shared_->formal_lu.solve(b);
  check_residual(shared_->formal, inf_norm(shared_->formal), x, b, "solve_formal_adjoint");
  ScalarField out(grid_);
  for (long k = 0; k < N; ++k) out[k] = x[k];
  return out;
}

}  // namespace bilab
