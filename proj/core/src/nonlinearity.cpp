#include "bilab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bilab/error.hpp"
#include "bilab/quadrature.hpp"

namespace bilab {

namespace {

constexpr int kGroup[kJetSize] = {0, 1, 1, 2};

void max_into(JetDerivatives& acc, const JetDerivatives& d) {
  acc.value = std::max(acc.value, std::abs(d.value));
  for (int a = 0; a < 4; ++a) {
    acc.d1[a] = std::max(acc.d1[a], std::abs(d.d1[a]));
    for (int b = 0; b < 4; ++b) {
      acc.d2[a][b] = std::max(acc.d2[a][b], std::abs(d.d2[a][b]));
      for (int c = 0; c < 4; ++c) acc.d3[a][b][c] = std::max(acc.d3[a][b][c], std::abs(d.d3[a][b][c]));
    }
  }
}

double falling(int k, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= (k - i);
  return r;
}

class Builtin final : public Nonlinearity {
 public:
  enum class Kind { zero, power, sine, zq, pquad };

  Builtin(Kind kind, int k, double c, Gamma g) : kind_(kind), k_(k), c_(c), gamma_(g) {}

  std::string name() const override {
    std::ostringstream os;
    switch (kind_) {
      case Kind::zero: return "zero";
      case Kind::power: os << "power(k=" << k_ << ")"; break;
      case Kind::sine: os << "sine"; break;
      case Kind::zq: os << "zq"; break;
      case Kind::pquad: os << "pquad"; break;
    }
    if (c_ != 1.0) os << "*" << c_;
    if (gamma_ != Gamma::one) os << "*" << gamma_name(gamma_);
    return os.str();
  }

  JetDerivatives evaluate(const Site& site, const Jet& j, int order) const override {
    JetDerivatives d;
    if (kind_ == Kind::zero) return d;
    double g = c_ * gamma_value(gamma_, site.x, site.y);
    switch (kind_) {
      case Kind::power: {
        double z = j[kZ];
        auto term = [&](int n) { return k_ >= n ? g * falling(k_, n) * std::pow(z, k_ - n) : 0.0; };
        d.value = term(0);
        if (order >= 1) d.d1[kZ] = term(1);
        if (order >= 2) d.d2[kZ][kZ] = term(2);
        if (order >= 3) d.d3[kZ][kZ][kZ] = term(3);
        break;
      }
      case Kind::sine: {
        double s = std::sin(j[kZ]);
        double c = std::cos(j[kZ]);
        d.value = g * s;
        if (order >= 1) d.d1[kZ] = g * c;
        if (order >= 2) d.d2[kZ][kZ] = -g * s;
        if (order >= 3) d.d3[kZ][kZ][kZ] = -g * c;
        break;
      }
      case Kind::zq:
        d.value = g * j[kZ] * j[kQ];
        if (order >= 1) {
          d.d1[kZ] = g * j[kQ];
          d.d1[kQ] = g * j[kZ];
        }
        if (order >= 2) d.d2[kZ][kQ] = d.d2[kQ][kZ] = g;
        break;
      case Kind::pquad:
        d.value = g * (j[kP1] * j[kP1] + j[kP2] * j[kP2]);
        if (order >= 1) {
          d.d1[kP1] = 2 * g * j[kP1];
          d.d1[kP2] = 2 * g * j[kP2];
        }
        if (order >= 2) d.d2[kP1][kP1] = d.d2[kP2][kP2] = 2 * g;
        break;
      case Kind::zero: break;
    }
    return d;
  }

  JetDerivatives box_bound(const Site& site, double M) const override {
    JetDerivatives d;
    if (kind_ == Kind::zero) return d;
    double G = std::abs(c_ * gamma_value(gamma_, site.x, site.y));
    switch (kind_) {
      case Kind::power: {
        auto term = [&](int n) { return k_ >= n ? G * falling(k_, n) * std::pow(M, k_ - n) : 0.0; };
        d.value = term(0);
        d.d1[kZ] = term(1);
        d.d2[kZ][kZ] = term(2);
        d.d3[kZ][kZ][kZ] = term(3);
        break;
      }
      case Kind::sine: {
        double s = std::sin(std::min(M, std::numbers::pi / 2));
        d.value = G * s;
        d.d1[kZ] = G;
        d.d2[kZ][kZ] = G * s;
        d.d3[kZ][kZ][kZ] = G;
        break;
      }
      case Kind::zq:
        d.value = G * M * M;
        d.d1[kZ] = d.d1[kQ] = G * M;
        d.d2[kZ][kQ] = d.d2[kQ][kZ] = G;
        break;
      case Kind::pquad:
        d.value = 2 * G * M * M;
        d.d1[kP1] = d.d1[kP2] = 2 * G * M;
        d.d2[kP1][kP1] = d.d2[kP2][kP2] = 2 * G;
        break;
      case Kind::zero: break;
    }
    return d;
  }

 private:
  Kind kind_;
  int k_;
  double c_;
  Gamma gamma_;
};

double remainder_point(const Nonlinearity& Q, const Site& site, const Jet& jw, const Jet& jh,
                       const GaussRule& rule) {
  JetDerivatives base = Q.evaluate(site, jw, 1);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    Jet jt;
    for (int a = 0; a < 4; ++a) jt[a] = jw[a] + rule.nodes[q] * jh[a];
    JetDerivatives d = Q.evaluate(site, jt, 1);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) acc += (d.d1[a] - base.d1[a]) * jh[a];
    sum += rule.weights[q] * acc;
  }
  return sum;
}

void check_finite(double v, const DomainGrid& g, std::size_t k, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << ": non-finite value at node (" << g.i_of(k) << "," << g.j_of(k) << ")";
    throw NumericalError(os.str());
  }
}

}  // namespace

JetDerivatives Nonlinearity::box_bound(const Site& site, double M) const {
  constexpr int kSamples = 7;
  JetDerivatives acc;
  Jet j;
  for (int a = 0; a < kSamples; ++a) {
    j[0] = -M + 2 * M * a / (kSamples - 1);
    for (int b = 0; b < kSamples; ++b) {
      j[1] = -M + 2 * M * b / (kSamples - 1);
      for (int c = 0; c < kSamples; ++c) {
        j[2] = -M + 2 * M * c / (kSamples - 1);
        for (int e = 0; e < kSamples; ++e) {
          j[3] = -M + 2 * M * e / (kSamples - 1);
          max_into(acc, evaluate(site, j, 3));
        }
      }
    }
  }
  return acc;
}

Gamma parse_gamma(const std::string& name) {
  if (name == "one") return Gamma::one;
  if (name == "bump") return Gamma::bump;
  if (name == "cosx") return Gamma::cosx;
  throw PreconditionError("unknown gamma '" + name + "' (expected one, bump, cosx)");
}

std::string gamma_name(Gamma g) {
  switch (g) {
    case Gamma::one: return "one";
    case Gamma::bump: return "bump";
    case Gamma::cosx: return "cosx";
  }
  return "?";
}

double gamma_value(Gamma g, double x, double y) {
  switch (g) {
    case Gamma::one: return 1.0;
    case Gamma::bump: {
      double dx = x - 0.5;
      double dy = y - 0.5;
      return std::exp(-8.0 * (dx * dx + dy * dy));
    }
    case Gamma::cosx: return std::cos(std::numbers::pi * x);
  }
  return 1.0;
}

NonlinearityPtr make_zero() { return std::make_shared<Builtin>(Builtin::Kind::zero, 0, 1.0, Gamma::one); }

NonlinearityPtr make_power(int k, double c, Gamma g) {
  if (k < 2) throw PreconditionError("power nonlinearity needs k >= 2, got " + std::to_string(k));
  return std::make_shared<Builtin>(Builtin::Kind::power, k, c, g);
}

NonlinearityPtr make_sine(double c, Gamma g) { return std::make_shared<Builtin>(Builtin::Kind::sine, 0, c, g); }
NonlinearityPtr make_zq(double c, Gamma g) { return std::make_shared<Builtin>(Builtin::Kind::zq, 0, c, g); }
NonlinearityPtr make_pquad(double c, Gamma g) { return std::make_shared<Builtin>(Builtin::Kind::pquad, 0, c, g); }

NonlinearityPtr make_nonlinearity(const NonlinearitySpec& spec) {
  const auto& p = spec.params;
  auto coef = [&](std::size_t idx) { return p.size() > idx ? p[idx] : 1.0; };
  if (spec.kind == "zero") return make_zero();
  if (spec.kind == "power") {
    double kd = p.empty() ? 3.0 : p[0];
    int k = static_cast<int>(std::lround(kd));
    if (std::abs(kd - k) > 1e-12) throw PreconditionError("power exponent must be an integer");
    return make_power(k, coef(1), spec.gamma);
  }
  if (spec.kind == "sine") return make_sine(coef(0), spec.gamma);
  if (spec.kind == "zq") return make_zq(coef(0), spec.gamma);
  if (spec.kind == "pquad") return make_pquad(coef(0), spec.gamma);
  throw PreconditionError("unknown nonlinearity kind '" + spec.kind +
                          "' (expected zero, power, sine, zq, pquad)");
}

Site site_at(const DomainGrid& g, std::size_t k) { return {k, g.x_of(k), g.y_of(k)}; }

Jet jet_at(const MixedField& f, std::size_t k) {
  const DomainGrid& g = f.grid();
  int i = g.i_of(k);
  int j = g.j_of(k);
  return {f.u[k], first_difference(f.u, i, j, Axis::x), first_difference(f.u, i, j, Axis::y), f.m[k]};
}

std::vector<Jet> jets(const MixedField& f) {
  std::vector<Jet> out(f.u.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = jet_at(f, k);
  return out;
}

ScalarField eval_Q(const Nonlinearity& Q, const MixedField& u) {
  const DomainGrid& g = u.grid();
  ScalarField out(u.grid_ptr());
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k] = Q.value(site_at(g, k), jet_at(u, k));
    check_finite(out[k], g, k, "eval_Q");
  }
  return out;
}

ScalarField eval_Q(const Nonlinearity& Q, const ScalarField& u) { return eval_Q(Q, MixedField(u)); }

LinearizedCoefficients linearized_coeffs(const Nonlinearity& Q, const MixedField& w) {
  const DomainGrid& g = w.grid();
  LinearizedCoefficients c{ScalarField(w.grid_ptr()), VectorField(w.grid_ptr()),
                           ScalarField(w.grid_ptr()), Q.name()};
  for (std::size_t k = 0; k < g.size(); ++k) {
    JetDerivatives d = Q.evaluate(site_at(g, k), jet_at(w, k), 1);
    c.A[k] = d.d1[kQ];
    c.X.x()[k] = d.d1[kP1];
    c.X.y()[k] = d.d1[kP2];
    c.V[k] = d.d1[kZ];
    for (int a = 0; a < 4; ++a) check_finite(d.d1[a], g, k, "linearized_coeffs");
  }
  return c;
}

LinearizedCoefficients linearized_coeffs(const Nonlinearity& Q, const ScalarField& w) {
  return linearized_coeffs(Q, MixedField(w));
}

ScalarField apply_linear_part(const LinearizedCoefficients& c, const MixedField& h) {
  const DomainGrid& g = h.grid();
  ScalarField out(h.grid_ptr());
  for (std::size_t k = 0; k < g.size(); ++k) {
    Jet j = jet_at(h, k);
    out[k] = c.A[k] * j[kQ] + c.X.x()[k] * j[kP1] + c.X.y()[k] * j[kP2] + c.V[k] * j[kZ];
  }
  return out;
}

ScalarField remainder_R(const Nonlinearity& Q, const MixedField& w, const MixedField& h,
                        int quad_nodes) {
  if (quad_nodes < 2) throw PreconditionError("remainder_R needs quad_nodes >= 2");
  require_same_grid(w.grid(), h.grid(), "remainder_R");
  GaussRule rule = gauss_legendre01(quad_nodes);
  const DomainGrid& g = w.grid();
  ScalarField out(w.grid_ptr());
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k] = remainder_point(Q, site_at(g, k), jet_at(w, k), jet_at(h, k), rule);
    check_finite(out[k], g, k, "remainder_R");
  }
  return out;
}

ScalarField taylor_identity_check(const Nonlinearity& Q, const MixedField& w, const MixedField& h,
                                  int quad_nodes) {
  MixedField wh = w + h;
  LinearizedCoefficients c = linearized_coeffs(Q, w);
  return eval_Q(Q, wh) - eval_Q(Q, w) - apply_linear_part(c, h) - remainder_R(Q, w, h, quad_nodes);
}

double RemainderExpansion::mismatch() const {
  return (direct - expanded - cross_block).max_abs();
}

double RemainderExpansion::paper_mismatch() const { return (direct - expanded).max_abs(); }

RemainderExpansion remainder_difference_expansion(const Nonlinearity& Q, const MixedField& w,
                                                  const MixedField& v, const MixedField& r1,
                                                  const MixedField& r2, int quad_nodes) {
  if (quad_nodes < 2) throw PreconditionError("expansion needs quad_nodes >= 2");
  GaussRule rule = gauss_legendre01(quad_nodes);
  const DomainGrid& g = w.grid();
  MixedField u1 = v + r1;
  MixedField u2 = v + r2;
  RemainderExpansion out{ScalarField(w.grid_ptr()), ScalarField(w.grid_ptr()),
                         ScalarField(w.grid_ptr())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    Site site = site_at(g, k);
    Jet jw = jet_at(w, k);
    Jet j1 = jet_at(u1, k);
    Jet j2 = jet_at(u2, k);
    Jet dj;
    for (int a = 0; a < 4; ++a) dj[a] = j1[a] - j2[a];

    out.direct[k] = remainder_point(Q, site, jw, j1, rule) - remainder_point(Q, site, jw, j2, rule);

    double first = 0.0;
    double same = 0.0;
    double cross = 0.0;
    for (std::size_t it = 0; it < rule.size(); ++it) {
      double t = rule.nodes[it];
      for (std::size_t is = 0; is < rule.size(); ++is) {
        double s = rule.nodes[is];
        double wts = rule.weights[it] * rule.weights[is];
        // d/ds of the first partials along w + s t u_i.
        for (const Jet* ji : {&j1, &j2}) {
          Jet x;
          for (int a = 0; a < 4; ++a) x[a] = jw[a] + s * t * (*ji)[a];
          JetDerivatives d = Q.evaluate(site, x, 2);
          double acc = 0.0;
          for (int a = 0; a < 4; ++a) {
            double dd = 0.0;
            for (int b = 0; b < 4; ++b) dd += d.d2[a][b] * t * (*ji)[b];
            acc += dj[a] * dd;
          }
          first += wts * acc;
        }
        for (std::size_t iq = 0; iq < rule.size(); ++iq) {
          double tau = rule.nodes[iq];
          double wq = wts * rule.weights[iq] * s * t * t;
          Jet x;
          for (int a = 0; a < 4; ++a) x[a] = jw[a] + s * t * j2[a] + tau * s * t * dj[a];
          JetDerivatives d = Q.evaluate(site, x, 3);
          for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
              double inner = 0.0;
              for (int c = 0; c < 4; ++c) inner += d.d3[a][b][c] * dj[c];
              double term = wq * j1[a] * j2[b] * inner;
              if (kGroup[a] == kGroup[b]) {
                same += term;
              } else {
                cross += term;
              }
            }
          }
        }
      }
    }
    out.expanded[k] = first + same;
    out.cross_block[k] = cross;
    check_finite(out.direct[k], g, k, "remainder expansion");
    check_finite(out.expanded[k], g, k, "remainder expansion");
  }
  return out;
}

double DerivativeBoundReport::worst_ratio() const {
  double r = 0.0;
  for (double x : ratio) r = std::max(r, x);
  return r;
}

DerivativeBoundReport derivative_bound_check(const Nonlinearity& Q, const MixedField& f,
                                             int max_order) {
  if (max_order < 0 || max_order > 3) throw PreconditionError("derivative orders are 0..3");
  const DomainGrid& g = f.grid();
  DerivativeBoundReport rep;
  rep.M = c2_norm(f);
  JetDerivatives meas;
  JetDerivatives bnd;
  for (std::size_t k = 0; k < g.size(); ++k) {
    Site site = site_at(g, k);
    max_into(meas, Q.evaluate(site, jet_at(f, k), max_order));
    max_into(bnd, Q.box_bound(site, rep.M));
  }
  auto ratio = [](double m, double b) {
    if (m == 0.0) return 0.0;
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return m / b;
  };
  rep.measured.assign(max_order + 1, 0.0);
  rep.bound.assign(max_order + 1, 0.0);
  rep.ratio.assign(max_order + 1, 0.0);
  auto record = [&](int l, double m, double b) {
    rep.measured[l] = std::max(rep.measured[l], m);
    rep.bound[l] = std::max(rep.bound[l], b);
    rep.ratio[l] = std::max(rep.ratio[l], ratio(m, b));
  };
  record(0, meas.value, bnd.value);
  for (int a = 0; a < 4; ++a) {
    if (max_order >= 1) record(1, meas.d1[a], bnd.d1[a]);
    for (int b = 0; b < 4; ++b) {
      if (max_order >= 2) record(2, meas.d2[a][b], bnd.d2[a][b]);
      for (int c = 0; c < 4; ++c) {
        if (max_order >= 3) record(3, meas.d3[a][b][c], bnd.d3[a][b][c]);
      }
    }
  }
  return rep;
}

}  // namespace bilab
