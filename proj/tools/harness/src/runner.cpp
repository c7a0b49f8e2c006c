#include "bilab/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>

#include "bilab/cauchy.hpp"
#include "bilab/error.hpp"
#include "bilab/field_io.hpp"
#include "bilab/gauge.hpp"
#include "bilab/recovery.hpp"
#include "bilab/runge.hpp"
#include "bilab/second_map.hpp"

namespace bilab::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;
constexpr double pi = std::numbers::pi;

Check make_check(std::string name, double value, Relation rel, double tolerance, double upper) {
  Check c{std::move(name), value, tolerance, rel, upper, false};
  switch (rel) {
    case Relation::less: c.pass = value < tolerance; break;
    case Relation::less_equal: c.pass = value <= tolerance; break;
    case Relation::greater: c.pass = value > tolerance; break;
    case Relation::greater_equal: c.pass = value >= tolerance; break;
    case Relation::within: c.pass = value >= tolerance && value <= upper; break;
  }
  if (!std::isfinite(value)) c.pass = false;
  return c;
}

void Report::add(Check c) {
  for (const auto& existing : checks) {
    if (existing.name == c.name) throw std::logic_error("check '" + c.name + "' reported twice");
  }
  checks.push_back(std::move(c));
}

bool Report::passed() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::less: return "<";
    case Relation::less_equal: return "<=";
    case Relation::greater: return ">";
    case Relation::greater_equal: return ">=";
    case Relation::within: return "in";
  }
  return "?";
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

json Report::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  j["config"] = config;
  json cs = json::array();
  for (const auto& c : checks) {
    json e{{"name", c.name}, {"value", number(c.value)}, {"relation", relation_name(c.relation)}, {"pass", c.pass}};
    if (c.relation == Relation::within) {
      e["tolerance"] = json::array({c.tolerance, c.upper});
    } else {
      e["tolerance"] = c.tolerance;
    }
    cs.push_back(e);
  }
  j["checks"] = cs;
  j["data"] = data;
  j["artifacts"] = artifacts;
  j["error"] = error.empty() ? json(nullptr) : json(error);
  j["pass"] = passed();
  return j;
}

json Report::timings_json() const {
  json j = json::object();
  for (const auto& [k, v] : timings) j[k] = v;
  return j;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"forward", "fixpoint",  "cauchy-probe", "project",        "second-map",
                                                 "recover", "runge",     "sweep",        "verify-appendix"};
  return names;
}

bool is_subcommand(const std::string& name) {
  const auto& s = subcommands();
  return std::find(s.begin(), s.end(), name) != s.end();
}

int exit_code(const Report& r) { return r.passed() ? 0 : 1; }

void write_report(const Report& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "report.json");
    os << r.to_json().dump(2) << "\n";
  }
  std::ofstream os(fs::path(out_dir) / "timings.json");
  os << r.timings_json().dump(2) << "\n";
}

namespace {

// Independent generator per named purpose.
std::mt19937_64 stream(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

class Context {
 public:
  Context(const Config& cfg, std::string out_dir, Report& rep) : cfg_(cfg), out_(std::move(out_dir)), rep_(rep) {}

  const Config& cfg() const { return cfg_; }
  Report& report() { return rep_; }
  int threads() const { return static_cast<int>(cfg_.get_int("threads")); }

  template <typename F>
  auto timed(const std::string& stage, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
      rep_.timings.emplace_back(stage, d.count());
    };
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto out = body();
      finish();
      return out;
    }
  }

  void field(const std::string& name, const ScalarField& f) {
    save_field((fs::path(out_) / name).string(), f);
    rep_.artifacts.push_back(name);
  }

  void table(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
    std::ofstream os(fs::path(out_) / name);
    os.precision(17);
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
      os << "\n";
    }
    if (!os) throw std::runtime_error("cannot write " + name);
    rep_.artifacts.push_back(name);
  }

  void check(std::string name, double value, Relation rel, double tol, double upper = 0.0) {
    rep_.add(make_check(std::move(name), value, rel, tol, upper));
  }

  GridPtr grid() const {
    int n = static_cast<int>(cfg_.get_int("grid.n"));
    return DomainGrid::square(n);
  }

  NonlinearityPtr q(const std::string& prefix) const {
    NonlinearitySpec s;
    s.kind = cfg_.get_text(prefix + ".kind");
    s.params = cfg_.get_list(prefix + ".params");
    s.gamma = parse_gamma(cfg_.get_text(prefix + ".gamma"));
    return make_nonlinearity(s);
  }

  FixedPointConfig fp() const {
    FixedPointConfig f;
    f.tol = cfg_.get_real("fp.tol");
    f.max_iter = static_cast<int>(cfg_.get_int("fp.max_iter"));
    f.delta_cap = cfg_.get_real("fp.delta_cap");
    f.quad_nodes = static_cast<int>(cfg_.get_int("fp.quad_nodes"));
    f.base_tol = cfg_.get_real("fp.base_tol");
    return f;
  }

  NewtonConfig newton() const {
    return {cfg_.get_real("newton.tol"), static_cast<int>(cfg_.get_int("newton.max_iter"))};
  }

  MixedField base(const NonlinearityPtr& Q, const GridPtr& g) const {
    if (cfg_.get_text("base") == "zero") return MixedField::zero(g);
    double a = cfg_.get_real("base.amplitude");
    NavierData bc{BoundaryTrace::from_arclength(g, [=](double s) { return a * std::cos(pi * s / 2); }),
                  BoundaryTrace::from_arclength(g, [=](double s) { return a * std::sin(pi * s); })};
    return solve_nonlinear(*Q, ScalarField(g), bc, MixedField::zero(g), newton()).u;
  }

  std::mt19937_64 rng(const std::string& name) const { return stream(cfg_.seed(), name); }

 private:
  const Config& cfg_;
  std::string out_;
  Report& rep_;
};

double interior_sup(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t k : f.grid().interior_nodes()) m = std::max(m, std::abs(f[k]));
  return m;
}

double sup(const MixedField& f) { return std::max(f.u.max_abs(), f.m.max_abs()); }

ScalarField random_smooth(const GridPtr& g, std::mt19937_64& rng, double amp) {
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

// Second nonlinearity and base for the two-map experiments.
struct Pairing {
  NonlinearityPtr Q2;
  MixedField w2;
  ScalarField phi;  // expected u2 - u1
  std::string scenario;
};

Pairing make_pairing(const Context& ctx, const SolutionMap& S1) {
  const GridPtr& g = S1.w().grid_ptr();
  const std::string kind = ctx.cfg().get_text("q2.kind");
  if (kind == "same") return {S1.Q_ptr(), S1.w(), ScalarField(g), "same"};
  if (kind == "gauge") {
    ScalarField phi = radial_bump(g, ctx.cfg().get_real("gauge.amplitude"), 0.5, 0.5, ctx.cfg().get_real("gauge.radius"));
    return {gauge_transform(S1.Q_ptr(), -1.0 * phi), S1.w() + MixedField(phi), phi, "gauge"};
  }
  return {ctx.q("q2"), S1.w(), ScalarField(g), "explicit"};
}

// ---- forward

void run_forward(Context& ctx) {
  const Config& cfg = ctx.cfg();
  auto Q = ctx.q("q1");
  std::vector<double> grids = cfg.get_list("forward.grids");
  if (grids.size() < 2) throw PreconditionError("forward.grids needs at least two grids");
  std::vector<std::vector<double>> rows;
  std::vector<double> errors, hs;
  json table = json::array();
  std::optional<MixedField> finest;
  bool zero_q = cfg.get_text("q1.kind") == "zero";
  ctx.timed("forward", [&] {
    for (double gn : grids) {
      GridPtr g = DomainGrid::square(static_cast<int>(gn));
      // manufactured u* = sin(pi x) sin(pi y); Navier data vanish
      ScalarField exact = ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
      ScalarField F(g);
      for (std::size_t k = 0; k < g->size(); ++k) {
        double x = g->x_of(k), y = g->y_of(k);
        double sx = std::sin(pi * x), sy = std::sin(pi * y), cx = std::cos(pi * x), cy = std::cos(pi * y);
        Jet j{sx * sy, pi * cx * sy, pi * sx * cy, -2 * pi * pi * sx * sy};
        F[k] = 4 * std::pow(pi, 4) * sx * sy + (zero_q ? 0.0 : Q->value(Site{k, x, y}, j));
      }
      MixedField u;
      int iterations = 0;
      if (zero_q) {
        u = AssembledOperator::biharmonic(g).solve(F, NavierData::zero(g));
      } else {
        NewtonConfig nc = ctx.newton();
        nc.tol *= std::max(1.0, F.max_abs());
        auto res = solve_nonlinear(*Q, F, NavierData::zero(g), MixedField::zero(g), nc);
        u = res.u;
        iterations = res.iterations;
      }
      double err = (u.u - exact).max_abs();
      errors.push_back(err);
      hs.push_back(g->hx());
      double order = errors.size() > 1 ? std::log(errors[errors.size() - 2] / err) / std::log(hs[hs.size() - 2] / g->hx())
                                       : std::nan("");
      rows.push_back({gn, g->hx(), err, order, static_cast<double>(iterations)});
      table.push_back({{"n", static_cast<int>(gn)}, {"h", g->hx()}, {"error", err}, {"order", number(order)},
                       {"newton_iterations", iterations}});
      finest = u;
    }
  });
  double min_order = 1e300;
  for (std::size_t i = 1; i < errors.size(); ++i) min_order = std::min(min_order, rows[i][3]);
  ctx.table("forward_convergence.csv", {"n", "h", "max_error", "order", "newton_iterations"}, rows);
  ctx.field("forward_u.csv", finest->u);
  ctx.report().data["convergence"] = table;
  ctx.check("forward.observed_order", min_order, Relation::greater_equal, 1.9);
}

// ---- fixpoint

void run_fixpoint(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  auto rng = ctx.rng("fixpoint.v");
  MixedField v = random_linear_solution(S, rng, cfg.get_real("fixpoint.size"));

  auto res = ctx.timed("fixpoint.solve", [&] { return S.fixed_point(v); });
  MixedField u = S.w() + v + res.r;
  std::vector<std::vector<double>> it_rows;
  for (std::size_t i = 0; i < res.increments.size(); ++i) {
    it_rows.push_back({static_cast<double>(i + 1), res.increments[i], res.norms[i]});
  }
  ctx.table("fixpoint_iterations.csv", {"iteration", "increment", "c2_norm_r"}, it_rows);
  ctx.field("fixpoint_u.csv", u.u);
  ctx.field("fixpoint_r.csv", res.r.u);
  ctx.report().data["base_residual"] = S.base_residual();
  ctx.report().data["iterations"] = res.iterations;
  ctx.check("fixpoint.iterations", res.iterations, Relation::less_equal, 15);
  ctx.check("fixpoint.final_increment", res.increments.back(), Relation::less, 1e-10);
  ctx.check("fixpoint.equation_residual", interior_sup(nonlinear_residual(*Q, u)), Relation::less, 1e-8);

  // c2(Phi(s v)) / s^2 along the ray
  std::vector<double> ratios;
  json scal = json::array();
  ctx.timed("fixpoint.scaling", [&] {
    for (double s : cfg.get_list("fixpoint.scales")) {
      double ratio = c2_norm(S.fixed_point(s * v).r) / (s * s);
      ratios.push_back(ratio);
      scal.push_back({{"scale", s}, {"ratio", ratio}});
    }
  });
  ctx.report().data["quadratic_ratios"] = scal;
  double lo = *std::min_element(ratios.begin(), ratios.end());
  double hi = *std::max_element(ratios.begin(), ratios.end());
  if (hi == 0.0) {
    ctx.check("fixpoint.remainder_zero", hi, Relation::less_equal, 0.0);
  } else {
    ctx.check("fixpoint.quadratic_ratio_spread", lo > 0 ? hi / lo : INFINITY, Relation::less_equal, 2.0);
  }

  // central differences at v = 0 against the direction itself
  auto eps = cfg.get_list("fixpoint.eps");
  if (eps.size() != 2) throw PreconditionError("fixpoint.eps needs two steps");
  MixedField h = random_linear_solution(S, rng, cfg.get_real("fixpoint.direction_size"));
  MixedField zero = MixedField::zero(g);
  double e1 = 0, e2 = 0;
  ctx.timed("fixpoint.tangency", [&] {
    e1 = sup(S.directional_derivative(zero, h, eps[0]) - h);
    e2 = sup(S.directional_derivative(zero, h, eps[1]) - h);
  });
  ctx.report().data["tangency_errors"] = {e1, e2};
  if (std::max(e1, e2) < 1e-11) {
    ctx.check("fixpoint.tangency_error", std::max(e1, e2), Relation::less, 1e-10);
  } else {
    ctx.check("fixpoint.tangency_ratio", e1 / e2, Relation::within, 3.5, 4.5);
  }

  double worst = 0;
  int n_rt = static_cast<int>(cfg.get_int("fixpoint.roundtrip"));
  std::uniform_real_distribution<double> size(0.2, 1.0);
  ctx.timed("fixpoint.roundtrip", [&] {
    for (int i = 0; i < n_rt; ++i) {
      MixedField vi = random_linear_solution(S, rng, size(rng) * cfg.get_real("fixpoint.size"));
      worst = std::max(worst, c2_norm(S.converse(S.apply(vi)) - vi));
    }
  });
  ctx.check("fixpoint.roundtrip", worst, Relation::less, 1e-8);
}

// ---- cauchy-probe

void run_cauchy(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  StabilityProbeConfig pc;
  pc.n_pairs = static_cast<int>(cfg.get_int("cauchy.pairs"));
  pc.amplitude = cfg.get_real("cauchy.amplitude");
  pc.modes = static_cast<int>(cfg.get_int("cauchy.modes"));
  pc.threads = ctx.threads();
  pc.seed = cfg.seed();
  auto a = ctx.timed("cauchy.probe_a", [&] { return stability_probe(S, pc); });
  pc.seed = cfg.seed() + 1;
  auto b = ctx.timed("cauchy.probe_b", [&] { return stability_probe(S, pc); });
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < pc.n_pairs; ++i) rows.push_back({static_cast<double>(i), a.ratios[i], b.ratios[i]});
  ctx.table("cauchy_ratios.csv", {"pair", "ratio_seed_a", "ratio_seed_b"}, rows);
  ctx.report().data["max_ratio"] = {number(a.max_ratio), number(b.max_ratio)};
  ctx.report().data["skipped"] = {a.skipped, b.skipped};
  double hi = std::max(a.max_ratio, b.max_ratio);
  double lo = std::min(a.max_ratio, b.max_ratio);
  ctx.check("cauchy.max_ratio_finite", std::isfinite(hi) ? hi : INFINITY, Relation::less, 1e300);
  ctx.check("cauchy.seed_agreement", hi > 0 ? (hi - lo) / hi : INFINITY, Relation::less_equal, 0.5);

  auto rng = ctx.rng("cauchy.coincident");
  double worst = 0, worst_cd = 0;
  ctx.timed("cauchy.coincident", [&] {
    for (int i = 0; i < cfg.get_int("cauchy.coincident"); ++i) {
      auto cp = coincident_pair(S, random_linear_solution(S, rng, pc.amplitude, pc.modes));
      worst = std::max(worst, cp.interior_difference);
      worst_cd = std::max(worst_cd, cp.cauchy_mismatch);
    }
  });
  ctx.report().data["coincident_cauchy_mismatch"] = worst_cd;
  ctx.check("cauchy.coincident_interior_difference", worst, Relation::less, 1e-8);
}

// ---- project

void run_project(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  ZProjector P(S.linearization());
  auto rng = ctx.rng("project.fields");
  double idem = 0, orth = 0, range = 0, inv = 0;
  std::vector<std::vector<double>> rows;
  ctx.timed("project", [&] {
    int n = static_cast<int>(cfg.get_int("project.fields"));
    for (int i = 0; i < n; ++i) {
      ScalarField u = random_smooth(g, rng, 1.0);
      auto pr = P.project(u);
      auto pp = P.project(pr.Pu);
      double di = interior_sup(pp.Pu - pr.Pu) / std::max(interior_sup(pr.Pu), 1e-300);
      // the residual is orthogonal to L y for clamped y
      ScalarField y = P.space().restrict(random_smooth(g, rng, 1.0));
      ScalarField z = P.op().apply(y);
      ScalarField e = u - pr.Pu;
      double num = 0, ee = 0, zz = 0;
      for (std::size_t k : g->interior_nodes()) {
        num += e[k] * z[k];
        ee += e[k] * e[k];
        zz += z[k] * z[k];
      }
      double dorth = std::abs(num) / std::max(std::sqrt(ee * zz), 1e-300);
      double drange = P.project(z).relative_distance;
      double dinv = interior_sup(P.op().apply(P.inverse(pr.Pu)) - pr.Pu) / std::max(interior_sup(pr.Pu), 1e-300);
      idem = std::max(idem, di);
      orth = std::max(orth, dorth);
      range = std::max(range, drange);
      inv = std::max(inv, dinv);
      rows.push_back({static_cast<double>(i), pr.relative_distance, di, dorth, drange, dinv});
    }
  });
  ctx.table("project_fields.csv", {"field", "relative_distance", "idempotence", "orthogonality", "range", "inverse"}, rows);
  ctx.report().data["z_dimension"] = P.space().dimension();
  ctx.check("project.idempotence", idem, Relation::less, 1e-8);
  ctx.check("project.orthogonality", orth, Relation::less, 1e-8);
  ctx.check("project.range_fixed", range, Relation::less, 1e-8);
  ctx.check("project.inverse_roundtrip", inv, Relation::less, 1e-8);
}

// ---- second-map

void run_second(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  Pairing pair = make_pairing(ctx, S);
  SecondSolutionMap T(S, pair.Q2, pair.w2);
  ctx.report().data["scenario"] = pair.scenario;
  ctx.report().data["base_cauchy_mismatch"] = T.base_cauchy_mismatch();
  ctx.report().data["coefficient_gap"] = T.coefficient_gap();

  auto rng = ctx.rng("second.v");
  double size = cfg.get_real("second.size");
  int nd = static_cast<int>(cfg.get_int("second.directions"));
  std::vector<MixedField> vs;
  vs.push_back(MixedField::zero(g));
  for (int i = 1; i < nd; ++i) vs.push_back(random_linear_solution(S, rng, size));

  double defect = 0, q2res = 0, shift = 0, rmax = 0;
  std::vector<std::vector<double>> rows;
  std::optional<SecondMapResult> first;
  ctx.timed("second.apply", [&] {
    for (int i = 0; i < nd; ++i) {
      auto res = T.apply(vs[i]);
      double ds = interior_sup(res.u2.u - res.u1.u - pair.phi);
      defect = std::max(defect, res.cauchy_defect);
      q2res = std::max(q2res, res.q2_residual);
      shift = std::max(shift, ds);
      rmax = std::max(rmax, res.r.max_abs());
      rows.push_back({static_cast<double>(i), res.cauchy_defect, res.q2_residual, ds, res.r.max_abs(),
                      static_cast<double>(res.iterations)});
      if (!first) first = res;
    }
  });
  ctx.table("second_map.csv", {"direction", "cauchy_defect", "q2_residual", "shift_error", "max_r", "iterations"}, rows);
  ctx.field("second_u2.csv", first->u2.u);
  ctx.field("second_r.csv", first->r);
  double defect_tol = pair.scenario == "same" ? 1e-10 : 1e-6;
  ctx.check("second.cauchy_defect", defect, Relation::less, defect_tol);
  ctx.check("second.q2_residual", q2res, Relation::less, 1e-8);
  if (pair.scenario == "same") {
    ctx.check("second.r_zero", rmax, Relation::less_equal, 0.0);
  } else if (pair.scenario == "gauge") {
    ctx.check("second.gauge_shift", shift, Relation::less, 1e-6);
  }

  auto eps = cfg.get_list("second.eps");
  if (eps.size() != 2) throw PreconditionError("second.eps needs two steps");
  MixedField h = random_linear_solution(S, rng, size);
  double e1 = 0, e2 = 0;
  ctx.timed("second.derivative", [&] {
    e1 = T.dT_identity_check(h, eps[0]);
    e2 = T.dT_identity_check(h, eps[1]);
  });
  ctx.report().data["dT_errors"] = {e1, e2};
  // an affine map leaves only round-off, with no ratio to read
  if (std::max(e1, e2) < 1e-11) {
    ctx.check("second.dT_error", std::max(e1, e2), Relation::less, 1e-10);
  } else {
    ctx.check("second.dT_ratio", e1 / e2, Relation::within, 3.5, 4.5);
  }

  auto ind = ctx.timed("second.phi_independence", [&] { return phi_independence_check(T, vs); });
  ctx.report().data["phi_deviations"] = ind.deviations;
  ctx.check("second.phi_independence", ind.max_deviation, Relation::less, 1e-6);
}

// ---- recover

void run_recover(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  const AssembledOperator& op1 = S.linearization();
  const int K = static_cast<int>(cfg.get_int("recover.K"));
  const int n = static_cast<int>(cfg.get_int("recover.pairs"));
  PairConfig pc;
  pc.modes = static_cast<int>(cfg.get_int("recover.modes"));
  pc.threads = ctx.threads();
  const double reg = cfg.get_real("ls.reg");

  auto homo = ctx.timed("recover.homogeneous", [&] { return generate_solution_pairs(op1, op1, n, cfg.seed(), pc); });
  auto hsys = assemble_identity_system(homo, K);
  ctx.check("recover.homogeneous_rhs", hsys.rhs.lpNorm<Eigen::Infinity>(), Relation::less_equal, 1e-10);

  // constant potential shift
  double shift = cfg.get_real("recover.shift");
  AssembledOperator opv(g, op1.A(), op1.X(), op1.V() + ScalarField(g, shift));
  auto vp = ctx.timed("recover.vshift_pairs", [&] { return generate_solution_pairs(op1, opv, n, cfg.seed() + 1, pc); });
  auto vrec = ctx.timed("recover.vshift_solve", [&] {
    return recover_coefficient_difference(assemble_identity_system(vp, K), g, reg);
  });
  ScalarField vtruth(g, -shift);
  double verr = relative_l2_error(vrec.c, vtruth);
  ctx.field("recover_vshift_c.csv", vrec.c);
  ctx.report().data["vshift"] = {{"condition", vrec.condition}, {"residual", vrec.residual},
                                 {"identity_defect", identity_defect(vp, op1, opv)}};
  ctx.check("recover.vshift_error", verr, Relation::less, 0.1);

  // more pairs never hurt at a fixed small basis
  std::vector<std::vector<double>> mono;
  double worst_growth = 0;
  double prev = INFINITY;
  for (int m : {n / 8, n / 4, n / 2, n}) {
    if (m < 3 * 8) continue;
    std::vector<SolutionPair> sub(vp.begin(), vp.begin() + m);
    double e = relative_l2_error(recover_coefficient_difference(assemble_identity_system(sub, 8), g, reg).c, vtruth);
    if (std::isfinite(prev)) worst_growth = std::max(worst_growth, e / prev);
    prev = e;
    mono.push_back({static_cast<double>(m), e});
  }
  ctx.table("recover_pairs.csv", {"pairs", "vshift_error_K8"}, mono);
  ctx.check("recover.pairs_monotone", worst_growth, Relation::less_equal, 1.0001);

  // smooth bump in the Laplacian coefficient
  double amp = cfg.get_real("recover.bump_amplitude");
  double width = cfg.get_real("recover.bump_width");
  ScalarField bump = ScalarField::from_function(g, [=](double x, double y) {
    return amp * std::exp(-((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)) / width);
  });
  AssembledOperator opa(g, op1.A() + bump, op1.X(), op1.V());
  auto ap = ctx.timed("recover.bump_pairs", [&] { return generate_solution_pairs(op1, opa, n, cfg.seed() + 2, pc); });
  auto arec = ctx.timed("recover.bump_solve", [&] {
    return recover_coefficient_difference(assemble_identity_system(ap, K), g, reg);
  });
  double aerr = relative_l2_error(arec.a, -1.0 * bump);
  ctx.field("recover_bump_a.csv", arec.a);
  ctx.report().data["bump"] = {{"condition", arec.condition}, {"residual", arec.residual}};
  ctx.check("recover.bump_error", aerr, Relation::less, 0.15);
}

// ---- runge

void run_runge(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  const AssembledOperator& op = S.linearization();
  std::vector<int> Ks;
  for (double k : cfg.get_list("runge.K")) Ks.push_back(static_cast<int>(k));
  if (Ks.size() < 2) throw PreconditionError("runge.K needs at least two sizes");
  int Kmax = *std::max_element(Ks.begin(), Ks.end());
  auto basis = ctx.timed("runge.basis", [&] { return build_basis(op, Kmax, ctx.threads()); });
  Subdomain omega = Subdomain::centered(g, cfg.get_real("runge.diameter"));

  auto src = cfg.get_list("runge.source");
  if (src.size() != 2) throw PreconditionError("runge.source needs x,y");
  std::size_t sk = nearest_node(*g, src[0], src[1]);
  int si = g->i_of(sk), sj = g->j_of(sk);
  if (si >= omega.i0() - 1 && si <= omega.i1() + 1 && sj >= omega.j0() - 1 && sj <= omega.j1() + 1) {
    throw PreconditionError("runge.source must lie outside the subdomain");
  }
  if (g->is_boundary(sk)) throw PreconditionError("runge.source must be an interior node");
  ScalarField F(g);
  F[sk] = 1.0 / (g->hx() * g->hy());
  MixedField local = op.solve(F, NavierData::zero(g));

  std::vector<std::vector<double>> rows;
  double first_err = 0, last_err = 0, last_rel = 0;
  int Kmin = *std::min_element(Ks.begin(), Ks.end());
  ctx.timed("runge.approximate", [&] {
    for (int K : Ks) {
      SolutionBasis sub{op, std::vector<MixedField>(basis.members.begin(), basis.members.begin() + K)};
      auto ap = approximate_local_solution(sub, local, omega, cfg.get_real("runge.reg"));
      rows.push_back({static_cast<double>(K), ap.error, ap.relative_error, ap.condition});
      if (K == Kmin) first_err = ap.error;
      if (K == Kmax) {
        last_err = ap.error;
        last_rel = ap.relative_error;
      }
    }
  });
  ctx.table("runge_convergence.csv", {"K", "err", "relative_err", "condition"}, rows);
  ctx.report().data["subdomain"] = {{"i0", omega.i0()}, {"i1", omega.i1()}, {"j0", omega.j0()}, {"j1", omega.j1()},
                                    {"diameter", omega.diameter()}};
  ctx.check("runge.error_decreases", last_err / first_err, Relation::less, 1.0);
  ctx.check("runge.relative_error", last_rel, Relation::less, 1e-3);

  auto cp = cfg.get_list("runge.control_point");
  auto tv = cfg.get_list("runge.targets");
  if (cp.size() != 2 || tv.size() != 4) throw PreconditionError("runge.control_point needs x,y and runge.targets four values");
  int Kc = static_cast<int>(cfg.get_int("runge.control_K"));
  SolutionBasis cb = Kc <= Kmax ? SolutionBasis{op, std::vector<MixedField>(basis.members.begin(), basis.members.begin() + Kc)}
                                : build_basis(op, Kc, ctx.threads());
  PointTargets t{tv[0], {tv[1], tv[2]}, tv[3]};
  auto pcres = ctx.timed("runge.point_control", [&] { return point_control(cb, nearest_node(*g, cp[0], cp[1]), t); });
  ctx.field("runge_control.csv", pcres.field.u);
  ctx.report().data["control"] = {{"reached", pcres.reached}, {"condition", pcres.condition}};
  ctx.check("runge.point_control_miss", pcres.max_miss, Relation::less, 1e-6);
}

// ---- sweep

void run_sweep(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  SolutionMap S(Q, ctx.base(Q, g), ctx.fp());
  Pairing pair = make_pairing(ctx, S);
  ScalarField phi(g);
  if (pair.scenario != "same") {
    SecondSolutionMap T(S, pair.Q2, pair.w2);
    phi = T.apply(MixedField::zero(g)).u2.u - S.w().u;
  }
  std::vector<std::array<double, 2>> pts;
  for (const auto& p : cfg.get_points("sweep.points")) pts.push_back({p[0], p[1]});
  SweepConfig sc;
  sc.n_lambda = static_cast<int>(cfg.get_int("sweep.n_lambda"));
  sc.basis_K = static_cast<int>(cfg.get_int("sweep.basis_K"));
  sc.root_tol = cfg.get_real("sweep.root_tol");
  sc.threads = ctx.threads();
  auto res = ctx.timed("sweep", [&] { return reachable_sweep(S, pair.Q2, phi, pts, sc); });
  std::vector<std::vector<double>> rows;
  for (const auto& r : res.records) {
    rows.push_back({r.x, r.y, r.lambda, r.t, r.rho, r.jet[0], r.jet[1], r.jet[2], r.jet[3], r.q1, r.tq2, r.residual,
                    r.skipped ? 1.0 : 0.0});
  }
  ctx.table("sweep_records.csv",
            {"x", "y", "lambda", "t", "rho", "z", "p1", "p2", "q", "q1", "tq2", "residual", "skipped"}, rows);
  json pj = json::array();
  for (const auto& p : res.points) {
    pj.push_back({{"x", p.x}, {"y", p.y}, {"t_max", p.t_max}, {"epsilon", p.epsilon}, {"control_miss", p.control_miss}});
  }
  ctx.report().data["scenario"] = pair.scenario;
  ctx.report().data["points"] = pj;
  ctx.check("sweep.max_residual", res.max_residual, Relation::less, 1e-5);
  ctx.check("sweep.max_root_error", res.max_root_error, Relation::less, sc.root_tol);
  ctx.check("sweep.skipped", res.skipped, Relation::less_equal, 0);
}

// ---- verify-appendix

void run_verify(Context& ctx) {
  const Config& cfg = ctx.cfg();
  GridPtr g = ctx.grid();
  auto Q = ctx.q("q1");
  auto rng = ctx.rng("verify.fields");
  double size = cfg.get_real("verify.size");
  int nq = static_cast<int>(cfg.get_int("fp.quad_nodes"));
  double taylor = 0, expansion = 0, bound = 0;
  std::vector<std::vector<double>> rows;
  ctx.timed("verify", [&] {
    for (int i = 0; i < cfg.get_int("verify.configs"); ++i) {
      MixedField w(random_smooth(g, rng, 0.5));
      MixedField h(random_smooth(g, rng, size));
      MixedField v(random_smooth(g, rng, size));
      MixedField r1(random_smooth(g, rng, 0.4 * size));
      MixedField r2(random_smooth(g, rng, 0.4 * size));
      double t = taylor_identity_check(*Q, w, h, nq).max_abs();
      double e = remainder_difference_expansion(*Q, w, v, r1, r2, nq).paper_mismatch();
      double b = derivative_bound_check(*Q, w).worst_ratio();
      taylor = std::max(taylor, t);
      expansion = std::max(expansion, e);
      bound = std::max(bound, b);
      rows.push_back({static_cast<double>(i), t, e, b});
    }
  });
  ctx.table("verify_appendix.csv", {"config", "taylor_residual", "expansion_mismatch", "bound_ratio"}, rows);
  ctx.check("verify.taylor_residual", taylor, Relation::less, 1e-8);
  ctx.check("verify.expansion_mismatch", expansion, Relation::less, 1e-7);
  ctx.check("verify.derivative_bound_ratio", bound, Relation::less_equal, 1.0 + 1e-12);
}

}  // namespace

Report run(const std::string& subcommand, const Config& cfg, const std::string& out_dir) {
  if (!is_subcommand(subcommand)) throw ConfigError("<command line>", 0, "unknown subcommand '" + subcommand + "'");
  Report rep;
  rep.subcommand = subcommand;
  rep.config = cfg.echo();
  fs::create_directories(out_dir);
  Context ctx(cfg, out_dir, rep);
  static const std::map<std::string, std::function<void(Context&)>> table = {
      {"forward", run_forward}, {"fixpoint", run_fixpoint}, {"cauchy-probe", run_cauchy},
      {"project", run_project}, {"second-map", run_second}, {"recover", run_recover},
      {"runge", run_runge},     {"sweep", run_sweep},       {"verify-appendix", run_verify}};
  auto t0 = std::chrono::steady_clock::now();
  try {
    table.at(subcommand)(ctx);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
  rep.timings.emplace_back("total", d.count());
  return rep;
}

}  // namespace bilab::harness
