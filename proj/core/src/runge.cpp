#include "bilab/runge.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "bilab/error.hpp"

namespace bilab {

namespace {

std::array<double, 4> jet4(const MixedField& f, std::size_t k) {
  const DomainGrid& g = f.grid();
  int i = g.i_of(k);
  int j = g.j_of(k);
  return {f.u[k], first_difference(f.u, i, j, Axis::x), first_difference(f.u, i, j, Axis::y), f.m[k]};
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

double boundary_fourier_mode(int j, double s) {
  if (j < 0) throw PreconditionError("Fourier mode index must be >= 0");
  if (j == 0) return 1.0;
  int l = (j + 1) / 2;
  double th = 2 * std::numbers::pi * l * s / 4;
  return (j % 2 == 1) ? std::cos(th) : std::sin(th);
}

NavierData basis_boundary_data(const GridPtr& g, int k) {
  if (k < 0) throw PreconditionError("basis member index must be >= 0");
  int j = k / 2;
  BoundaryTrace mode = BoundaryTrace::from_arclength(g, [j](double s) { return boundary_fourier_mode(j, s); });
  NavierData d = NavierData::zero(g);
  if (k % 2 == 0) {
    d.f0 = std::move(mode);
  } else {
    d.f1 = std::move(mode);
  }
  return d;
}

SolutionBasis build_basis(const AssembledOperator& op, int K, int threads) {
  if (K < 1) throw PreconditionError("build_basis needs K >= 1");
  const GridPtr& g = op.grid_ptr();
  SolutionBasis b{op, std::vector<MixedField>(K)};
  // factorize once on this thread
  b.members[0] = op.solve(ScalarField(g), basis_boundary_data(g, 0));
  int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::clamp(nt, 1, std::max(1, K - 1));
  std::vector<std::string> errors(K);
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (int k = 1 + t; k < K; k += nt) {
        try {
          b.members[k] = op.solve(ScalarField(g), basis_boundary_data(g, k));
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int k = 0; k < K; ++k) {
    if (!errors[k].empty()) throw NumericalError("basis member " + std::to_string(k) + ": " + errors[k]);
  }
  return b;
}

double SolutionBasis::boundary_gram_min_singular() const {
  const GridPtr& g = op.grid_ptr();
  const long nb = static_cast<long>(g->boundary_size());
  Eigen::MatrixXd D(2 * nb, size());
  for (int k = 0; k < size(); ++k) {
    NavierData d = NavierData::of(members[k]);
    for (long s = 0; s < nb; ++s) {
      D(s, k) = d.f0[s];
      D(nb + s, k) = d.f1[s];
    }
  }
  Eigen::MatrixXd G = g->hx() * (D.transpose() * D);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  return svd.singularValues().minCoeff();
}

MixedField SolutionBasis::combine(const std::vector<double>& coeffs) const {
  if (static_cast<int>(coeffs.size()) != size()) throw PreconditionError("coefficient count does not match the basis");
  MixedField out = MixedField::zero(op.grid_ptr());
  for (int k = 0; k < size(); ++k) {
    if (coeffs[k] != 0.0) out += coeffs[k] * members[k];
  }
  return out;
}

Subdomain::Subdomain(GridPtr grid, int i0, int i1, int j0, int j1)
    : grid_(std::move(grid)), i0_(i0), i1_(i1), j0_(j0), j1_(j1) {
  const DomainGrid& g = *grid_;
  if (i0 < 0 || j0 < 0 || i1 >= g.nx() || j1 >= g.ny() || i0 >= i1 || j0 >= j1) {
    throw PreconditionError("subdomain bounds out of range or empty");
  }
  // a rectangle spanning the whole width or height cuts the complement in two
  if ((i0 == 0 && i1 == g.nx() - 1) || (j0 == 0 && j1 == g.ny() - 1)) {
    throw PreconditionError("subdomain complement is not connected");
  }
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      std::size_t k = g.index(i, j);
      nodes_.push_back(k);
      if (i > i0 && i < i1 && j > j0 && j < j1) inner_.push_back(k);
    }
  }
}

Subdomain Subdomain::centered(const GridPtr& grid, double diameter) {
  if (!(diameter > 0) || diameter >= std::sqrt(2.0)) throw PreconditionError("subdomain diameter out of range");
  double half = diameter / (2 * std::sqrt(2.0));
  auto lo = [&](double h) { return static_cast<int>(std::ceil((0.5 - half) / h - 1e-9)); };
  auto hi = [&](int n, double h) { return std::min(n - 2, static_cast<int>(std::floor((0.5 + half) / h + 1e-9))); };
  const DomainGrid& g = *grid;
  return Subdomain(grid, std::max(1, lo(g.hx())), hi(g.nx(), g.hx()), std::max(1, lo(g.hy())),
                   hi(g.ny(), g.hy()));
}

double Subdomain::diameter() const {
  return std::hypot((i1_ - i0_) * grid_->hx(), (j1_ - j0_) * grid_->hy());
}

double local_c2_norm(const MixedField& f, const Subdomain& omega, const C2Weights& w) {
  double m = 0.0;
  for (std::size_t k : omega.nodes()) {
    auto j = jet4(f, k);
    m = std::max({m, w.value * std::abs(j[0]), w.gradient * std::abs(j[1]), w.gradient * std::abs(j[2]),
                  w.laplacian * std::abs(j[3])});
  }
  return m;
}

LocalApproximation approximate_local_solution(const SolutionBasis& basis, const MixedField& u_local,
                                              const Subdomain& omega, double reg, const C2Weights& w) {
  require_same_grid(basis.op.grid(), u_local.grid(), "approximate_local_solution");
  require_same_grid(basis.op.grid(), omega.grid(), "approximate_local_solution subdomain");
  if (!(reg >= 0)) throw PreconditionError("regularisation must be >= 0");
  double scale = local_c2_norm(u_local, omega, w);
  ScalarField Lu = basis.op.apply(u_local);
  double res = 0.0;
  for (std::size_t k : omega.inner_nodes()) res = std::max(res, std::abs(Lu[k]));
  if (res > 1e-6 * std::max(1.0, scale)) {
    throw PreconditionError("local field does not solve the linearized equation on the subdomain (residual " +
                            fmt(res) + ")");
  }

  const long n = static_cast<long>(omega.nodes().size());
  const int K = basis.size();
  const double wt[4] = {w.value, w.gradient, w.gradient, w.laplacian};
  Eigen::MatrixXd M(4 * n, K);
  Eigen::VectorXd b(4 * n);
  for (long r = 0; r < n; ++r) {
    std::size_t node = omega.nodes()[r];
    auto t = jet4(u_local, node);
    for (int c = 0; c < 4; ++c) b[4 * r + c] = wt[c] * t[c];
    for (int k = 0; k < K; ++k) {
      auto jk = jet4(basis.members[k], node);
      for (int c = 0; c < 4; ++c) M(4 * r + c, k) = wt[c] * jk[c];
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  double smax = s.size() ? s[0] : 0.0;
  LocalApproximation out;
  out.coeffs.assign(K, 0.0);
  if (smax > 0) {
    double lam = reg * smax * smax;
    Eigen::VectorXd Utb = svd.matrixU().transpose() * b;
    Eigen::VectorXd filt(s.size());
    for (long i = 0; i < s.size(); ++i) filt[i] = s[i] / (s[i] * s[i] + lam) * Utb[i];
    Eigen::VectorXd c = svd.matrixV() * filt;
    for (int k = 0; k < K; ++k) out.coeffs[k] = c[k];
    double smin = s[s.size() - 1];
    out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  }
  out.approximant = basis.combine(out.coeffs);
  out.error = local_c2_norm(out.approximant - u_local, omega, w);
  out.relative_error = scale > 0 ? out.error / scale : out.error;
  return out;
}

PointControl point_control(const SolutionBasis& basis, std::size_t x0, const PointTargets& t, double rcond) {
  const DomainGrid& g = basis.op.grid();
  const int K = basis.size();
  if (K <= 4) throw PreconditionError("point_control needs more than 4 basis members");
  if (x0 >= g.size() || g.ring(x0) < 1) throw PreconditionError("point_control needs an interior node");
  Eigen::MatrixXd C(4, K);
  for (int k = 0; k < K; ++k) {
    auto j = jet4(basis.members[k], x0);
    for (int r = 0; r < 4; ++r) C(r, k) = j[r];
  }
  Eigen::Vector4d target(t.value, t.gradient[0], t.gradient[1], t.laplacian);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  PointControl out;
  out.condition = s[3] > 0 ? s[0] / s[3] : std::numeric_limits<double>::infinity();
  if (!(s[3] > rcond * s[0])) {
    throw SingularSystemError("point_control constraint matrix is rank deficient (condition " +
                              fmt(out.condition) + ")");
  }
  Eigen::VectorXd c = svd.matrixV() * (svd.matrixU().transpose() * target).cwiseQuotient(s);
  out.coeffs.assign(c.data(), c.data() + K);
  out.field = basis.combine(out.coeffs);
  auto j = jet4(out.field, x0);
  for (int r = 0; r < 4; ++r) {
    out.reached[r] = j[r];
    out.max_miss = std::max(out.max_miss, std::abs(j[r] - target[r]));
  }
  return out;
}

std::size_t nearest_node(const DomainGrid& g, double x, double y) {
  int i = std::clamp(static_cast<int>(std::lround(x / g.hx())), 0, g.nx() - 1);
  int j = std::clamp(static_cast<int>(std::lround(y / g.hy())), 0, g.ny() - 1);
  return g.index(i, j);
}

}  // namespace bilab
