#include "bilab/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "bilab/cauchy.hpp"
#include "bilab/error.hpp"
#include "bilab/gauge.hpp"

namespace bilab {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

template <class F>
void parallel_for(int n, int threads, F&& body) {
  int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::clamp(nt, 1, std::max(1, n));
  std::vector<std::string> errors(n);
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += nt) {
        try {
          body(i);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw NumericalError("task " + std::to_string(i) + ": " + errors[i]);
  }
}

double chebyshev(int n, double t) {
  if (n == 0) return 1.0;
  double a = 1.0, b = t;
  for (int k = 1; k < n; ++k) {
    double c = 2 * t * b - a;
    a = b;
    b = c;
  }
  return b;
}

}  // namespace

std::vector<SolutionPair> generate_solution_pairs(const AssembledOperator& op1, const AssembledOperator& op2,
                                                  int n_pairs, std::uint64_t seed, const PairConfig& cfg) {
  if (n_pairs < 0) throw PreconditionError("n_pairs must be >= 0");
  if (cfg.source_rings < 1) throw PreconditionError("source_rings must be >= 1");
  require_same_grid(op1.grid(), op2.grid(), "generate_solution_pairs");
  std::vector<SolutionPair> pairs(n_pairs);
  if (n_pairs == 0) return pairs;
  const GridPtr& g = op1.grid_ptr();
  // factorizations happen here, before any sharing
  op1.solve(ScalarField(g), NavierData::zero(g));
  op2.solve(ScalarField(g), NavierData::zero(g));
  op2.solve_adjoint(ScalarField(g));
  parallel_for(n_pairs, cfg.threads, [&](int i) {
    std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    NavierData bc = random_boundary_modes(g, rng, cfg.modes);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField F(g);
    for (std::size_t k = 0; k < g->size(); ++k) {
      int r = g->ring(k);
      if (r >= 1 && r <= cfg.source_rings) F[k] = U(rng);
    }
    SolutionPair& p = pairs[i];
    p.v1 = op1.solve(ScalarField(g), bc);
    p.u2 = op2.solve(ScalarField(g), bc);
    p.v2 = op2.solve_adjoint(F);
    p.F = std::move(F);
  });
  return pairs;
}

std::vector<std::array<int, 2>> chebyshev_indices(int K) {
  if (K < 1) throw PreconditionError("basis dimension K must be >= 1");
  int m = 0;
  while ((m + 1) * (m + 1) < K) ++m;
  std::vector<std::array<int, 2>> idx;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) idx.push_back({i, j});
  std::sort(idx.begin(), idx.end(), [](const auto& a, const auto& b) {
    auto key = [](const auto& p) { return std::array<int, 3>{std::max(p[0], p[1]), p[0] + p[1], p[0]}; };
    return key(a) < key(b);
  });
  idx.resize(K);
  return idx;
}

double chebyshev_tensor(int i, int j, double x, double y) { return chebyshev(i, 2 * x - 1) * chebyshev(j, 2 * y - 1); }

IdentitySystem assemble_identity_system(const std::vector<SolutionPair>& pairs, int K) {
  IdentitySystem sys;
  sys.K = K;
  sys.indices = chebyshev_indices(K);
  const long n = static_cast<long>(pairs.size());
  sys.rows = Eigen::MatrixXd::Zero(n, 4 * K);
  sys.rhs = Eigen::VectorXd::Zero(n);
  if (n == 0) return sys;
  const GridPtr& g = pairs[0].v1.grid_ptr();
  const auto interior = g->interior_nodes();
  Eigen::MatrixXd B(static_cast<long>(interior.size()), K);
  for (long r = 0; r < B.rows(); ++r) {
    std::size_t k = interior[r];
    for (int c = 0; c < K; ++c) B(r, c) = chebyshev_tensor(sys.indices[c][0], sys.indices[c][1], g->x_of(k), g->y_of(k));
  }
  for (long p = 0; p < n; ++p) {
    const SolutionPair& sp = pairs[p];
    require_same_grid(*g, sp.v1.grid(), "assemble_identity_system");
    Eigen::Matrix<double, Eigen::Dynamic, 4> prod(B.rows(), 4);
    for (long r = 0; r < B.rows(); ++r) {
      std::size_t k = interior[r];
      int i = g->i_of(k), j = g->j_of(k);
      double v2 = sp.v2[k];
      prod(r, 0) = v2 * sp.v1.m[k];
      prod(r, 1) = v2 * first_difference(sp.v1.u, i, j, Axis::x);
      prod(r, 2) = v2 * first_difference(sp.v1.u, i, j, Axis::y);
      prod(r, 3) = v2 * sp.v1.u[k];
    }
    Eigen::MatrixXd blocks = B.transpose() * prod;  // K x 4
    for (int f = 0; f < 4; ++f) sys.rows.block(p, f * K, 1, K) = blocks.col(f).transpose();
    double rhs = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) rhs -= sp.F[k] * (sp.v1.u[k] - sp.u2.u[k]);
    sys.rhs[p] = rhs;
  }
  return sys;
}

double identity_defect(const std::vector<SolutionPair>& pairs, const AssembledOperator& op1,
                       const AssembledOperator& op2) {
  double worst = 0.0;
  ScalarField dA = op1.A() - op2.A();
  ScalarField dX = op1.X().x() - op2.X().x();
  ScalarField dY = op1.X().y() - op2.X().y();
  ScalarField dV = op1.V() - op2.V();
  for (const SolutionPair& sp : pairs) {
    const DomainGrid& g = sp.v1.grid();
    double lhs = 0.0, scale = 0.0, rhs = 0.0;
    for (std::size_t k : g.interior_nodes()) {
      int i = g.i_of(k), j = g.j_of(k);
      double t = dA[k] * sp.v1.m[k] + dX[k] * first_difference(sp.v1.u, i, j, Axis::x) +
                 dY[k] * first_difference(sp.v1.u, i, j, Axis::y) + dV[k] * sp.v1.u[k];
      lhs += sp.v2[k] * t;
      scale += std::abs(sp.v2[k] * t);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      rhs -= sp.F[k] * (sp.v1.u[k] - sp.u2.u[k]);
      scale += std::abs(sp.F[k] * (sp.v1.u[k] - sp.u2.u[k]));
    }
    if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

RecoveryResult recover_coefficient_difference(const IdentitySystem& sys, const GridPtr& grid, double reg) {
  if (sys.n_rows() < 3L * sys.K) {
    throw PreconditionError("recovery needs at least 3K = " + std::to_string(3 * sys.K) + " rows, got " +
                            std::to_string(sys.n_rows()));
  }
  if (!(reg >= 0)) throw PreconditionError("regularisation must be >= 0");
  RecoveryResult out{ScalarField(grid), VectorField(grid), ScalarField(grid), {}, 0, 0, 0, 0};
  Eigen::MatrixXd M = sys.rows;
  Eigen::VectorXd rhs = sys.rhs;
  out.rhs_norm = rhs.lpNorm<Eigen::Infinity>();
  for (long r = 0; r < M.rows(); ++r) {
    double nr = M.row(r).norm();
    if (nr > 0) {
      M.row(r) /= nr;
      rhs[r] /= nr;
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  double smax = s[0];
  double smin = s[s.size() - 1];
  out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.lambda = reg * smax * smax;
  Eigen::VectorXd Utb = svd.matrixU().transpose() * rhs;
  Eigen::VectorXd filt(s.size());
  for (long i = 0; i < s.size(); ++i) {
    double d = s[i] * s[i] + out.lambda;
    filt[i] = d > 0 ? s[i] / d * Utb[i] : 0.0;
  }
  out.coeffs = svd.matrixV() * filt;
  double rn = rhs.norm();
  out.residual = rn > 0 ? (M * out.coeffs - rhs).norm() / rn : 0.0;

  const int K = sys.K;
  ScalarField bx(grid), by(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    double x = grid->x_of(k), y = grid->y_of(k);
    for (int c = 0; c < K; ++c) {
      double phi = chebyshev_tensor(sys.indices[c][0], sys.indices[c][1], x, y);
      out.a[k] += out.coeffs[c] * phi;
      bx[k] += out.coeffs[K + c] * phi;
      by[k] += out.coeffs[2 * K + c] * phi;
      out.c[k] += out.coeffs[3 * K + c] * phi;
    }
  }
  out.b = VectorField(std::move(bx), std::move(by));
  return out;
}

double relative_l2_error(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid(), "relative_l2_error");
  double num = inner_product(f - g, f - g);
  double den = inner_product(g, g);
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

PhiIndependence phi_independence_check(const SecondSolutionMap& T, const std::vector<MixedField>& v_list,
                                       double coeff_tol) {
  PhiIndependence out;
  if (v_list.empty()) return out;
  std::vector<MixedField> phis;
  for (const MixedField& v : v_list) {
    SecondMapResult r = T.apply(v);
    LinearizedCoefficients c1 = linearized_coeffs(T.first().Q(), r.u1);
    LinearizedCoefficients c2 = linearized_coeffs(T.Q2(), r.u2);
    double gap = std::max({(c1.A - c2.A).max_abs(), (c1.X.x() - c2.X.x()).max_abs(),
                           (c1.X.y() - c2.X.y()).max_abs(), (c1.V - c2.V).max_abs()});
    out.max_coefficient_gap = std::max(out.max_coefficient_gap, gap);
    if (gap > coeff_tol) {
      throw PreconditionError("phi independence check: linearizations differ by " + fmt(gap) +
                              " (the derivative equalities do not hold for this pair)");
    }
    phis.push_back(r.u2 - r.u1);
  }
  for (const MixedField& p : phis) {
    double d = c2_distance(p, phis.front());
    out.deviations.push_back(d);
    out.max_deviation = std::max(out.max_deviation, d);
  }
  return out;
}

SweepResult reachable_sweep(const SolutionMap& S1, const NonlinearityPtr& Q2, const ScalarField& phi,
                            const std::vector<std::array<double, 2>>& points, const SweepConfig& cfg) {
  if (cfg.n_lambda < 1 || !(cfg.root_tol > 0) || cfg.max_bisect < 1) throw PreconditionError("invalid sweep configuration");
  if (!(cfg.lambda_fraction > 0 && cfg.lambda_fraction < 1) || !(cfg.t_fraction > 0 && cfg.t_fraction <= 1)) {
    throw PreconditionError("sweep fractions must lie in (0, 1)");
  }
  const GridPtr& g = S1.w().grid_ptr();
  NonlinearityPtr TQ2 = gauge_transform(Q2, phi);
  SolutionBasis basis = build_basis(S1.linearization(), cfg.basis_K, cfg.threads);
  const MixedField& w1 = S1.w();

  SweepResult out;
  out.points.resize(points.size());
  std::vector<std::vector<SweepRecord>> per_point(points.size());

  parallel_for(static_cast<int>(points.size()), cfg.threads, [&](int ip) {
    std::size_t node = nearest_node(*g, points[ip][0], points[ip][1]);
    SweepPoint& pt = out.points[ip];
    pt.x = g->x_of(node);
    pt.y = g->y_of(node);
    PointControl pc = point_control(basis, node, cfg.targets);
    pt.control_miss = pc.max_miss;
    const MixedField& v = pc.field;
    auto rho = [&](double t, MixedField* u_out) {
      MixedField u = S1.apply(t * v);
      double r = u.u[node] - w1.u[node];
      if (u_out) *u_out = std::move(u);
      return r;
    };
    // adaptive bracket: shrink until both ends lie inside the contraction ball
    double tmax = cfg.t_fraction * S1.config().delta_cap / c2_norm(v);
    double rp = 0, rm = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      try {
        rp = rho(tmax, nullptr);
        rm = rho(-tmax, nullptr);
        ok = rm < 0 && rp > 0;
      } catch (const NumericalError&) {
        ok = false;
      }
      if (!ok) tmax *= 0.5;
    }
    pt.t_max = tmax;
    pt.epsilon = ok ? std::min(rp, -rm) : 0.0;
    for (int il = 0; il < cfg.n_lambda; ++il) {
      SweepRecord rec;
      rec.x = pt.x;
      rec.y = pt.y;
      rec.node = node;
      rec.lambda = cfg.n_lambda == 1 ? 0.0
                                     : cfg.lambda_fraction * pt.epsilon * (-1.0 + 2.0 * il / (cfg.n_lambda - 1));
      if (!ok) {
        rec.skipped = true;
        rec.note = "no sign change of rho on the admissible t range";
        per_point[ip].push_back(rec);
        continue;
      }
      double lo = rec.lambda >= 0 ? 0.0 : -tmax;
      double hi = rec.lambda >= 0 ? tmax : 0.0;
      MixedField u;
      double t = 0.0;
      double r = rho(0.0, &u) - rec.lambda;
      for (int it = 0; it < cfg.max_bisect && std::abs(r) >= cfg.root_tol; ++it) {
        t = 0.5 * (lo + hi);
        r = rho(t, &u) - rec.lambda;
        if (r < 0) {
          lo = t;
        } else {
          hi = t;
        }
      }
      rec.t = t;
      rec.rho = r + rec.lambda;
      int i = g->i_of(node), j = g->j_of(node);
      rec.rho_lap = u.m[node] - w1.m[node];
      rec.rho_grad = {first_difference(u.u, i, j, Axis::x) - first_difference(w1.u, i, j, Axis::x),
                      first_difference(u.u, i, j, Axis::y) - first_difference(w1.u, i, j, Axis::y)};
      rec.jet = jet_at(u, node);
      Site site = site_at(*g, node);
      rec.q1 = S1.Q().value(site, rec.jet);
      rec.tq2 = TQ2->value(site, rec.jet);
      rec.residual = std::abs(rec.q1 - rec.tq2);
      if (std::abs(r) >= cfg.root_tol) {
        rec.skipped = true;
        rec.note = "bisection did not reach the root tolerance";
      }
      per_point[ip].push_back(rec);
    }
  });

  for (auto& recs : per_point) {
    for (SweepRecord& rec : recs) {
      if (rec.skipped) {
        ++out.skipped;
      } else {
        out.max_residual = std::max(out.max_residual, rec.residual);
        out.max_root_error = std::max(out.max_root_error, std::abs(rec.rho - rec.lambda));
      }
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace bilab
