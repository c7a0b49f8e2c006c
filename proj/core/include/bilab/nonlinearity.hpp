#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bilab/grid.hpp"

namespace bilab {

// Slots of the jet (z, p1, p2, q) = (u, du/dx, du/dy, Laplacian u).
enum JetSlot : int { kZ = 0, kP1 = 1, kP2 = 2, kQ = 3 };
constexpr int kJetSize = 4;

using Jet = std::array<double, kJetSize>;

struct Site {
  std::size_t node;
  double x;
  double y;
};

// Q and its partials in the jet slots up to total order 3. d2 and d3 are
// stored as full symmetric tensors.
struct JetDerivatives {
  double value = 0.0;
  std::array<double, 4> d1{};
  std::array<std::array<double, 4>, 4> d2{};
  std::array<std::array<std::array<double, 4>, 4>, 4> d3{};
};

// Q(x, z, p, q). Implementations must be pure; evaluate fills derivatives up
// to `order` (0..3) and may leave higher ones zero.
class Nonlinearity {
 public:
  virtual ~Nonlinearity() = default;

  virtual std::string name() const = 0;
  virtual JetDerivatives evaluate(const Site& site, const Jet& jet, int order) const = 0;

  double value(const Site& site, const Jet& jet) const { return evaluate(site, jet, 0).value; }

  // Entrywise bounds on |Q| and its partials over the box
  // |z|, |p1|, |p2|, |q| <= M at the given site. The default samples the box
  // on a tensor grid; built-in kinds override with closed forms.
  virtual JetDerivatives box_bound(const Site& site, double M) const;
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

enum class Gamma { one, bump, cosx };

Gamma parse_gamma(const std::string& name);
std::string gamma_name(Gamma g);
double gamma_value(Gamma g, double x, double y);

struct NonlinearitySpec {
  std::string kind = "zero";  // zero | power | sine | zq | pquad
  // power: [k] or [k, c]; other kinds: [] or [c]. c scales Q (default 1).
  std::vector<double> params;
  Gamma gamma = Gamma::one;
};

NonlinearityPtr make_nonlinearity(const NonlinearitySpec& spec);
NonlinearityPtr make_zero();
NonlinearityPtr make_power(int k, double c = 1.0, Gamma g = Gamma::one);
NonlinearityPtr make_sine(double c = 1.0, Gamma g = Gamma::one);
NonlinearityPtr make_zq(double c = 1.0, Gamma g = Gamma::one);
NonlinearityPtr make_pquad(double c = 1.0, Gamma g = Gamma::one);

// Jet of a mixed field at node k: (u, grad u, m).
Jet jet_at(const MixedField& f, std::size_t k);
std::vector<Jet> jets(const MixedField& f);
Site site_at(const DomainGrid& g, std::size_t k);

// Pointwise Q(x, u, grad u, m); throws NumericalError naming the node on a
// non-finite value.
ScalarField eval_Q(const Nonlinearity& Q, const MixedField& u);
ScalarField eval_Q(const Nonlinearity& Q, const ScalarField& u);

struct LinearizedCoefficients {
  ScalarField A;  // dQ/dq
  VectorField X;  // dQ/dp
  ScalarField V;  // dQ/dz
  std::string source;
};

LinearizedCoefficients linearized_coeffs(const Nonlinearity& Q, const MixedField& w);
LinearizedCoefficients linearized_coeffs(const Nonlinearity& Q, const ScalarField& w);

// A*m + X.grad u + V*u for a mixed perturbation.
ScalarField apply_linear_part(const LinearizedCoefficients& c, const MixedField& h);

// Integral Taylor remainder of Q at w in direction h, t-integrals by
// Gauss-Legendre with `quad_nodes` points.
ScalarField remainder_R(const Nonlinearity& Q, const MixedField& w, const MixedField& h,
                        int quad_nodes = 8);

// Q(w+h) - Q(w) - (A m_h + X.grad h + V h) - R(h).
ScalarField taylor_identity_check(const Nonlinearity& Q, const MixedField& w,
                                  const MixedField& h, int quad_nodes = 8);

struct RemainderExpansion {
  ScalarField direct;       // R(v+r1) - R(v+r2)
  ScalarField expanded;     // right-hand side of the appendix expansion
  ScalarField cross_block;  // third-order terms pairing distinct jet groups
  double mismatch() const;  // sup |direct - expanded - cross_block|
  double paper_mismatch() const;  // sup |direct - expanded|
};

RemainderExpansion remainder_difference_expansion(const Nonlinearity& Q, const MixedField& w,
                                                  const MixedField& v, const MixedField& r1,
                                                  const MixedField& r2, int quad_nodes = 8);

struct DerivativeBoundReport {
  double M = 0.0;
  // Per total order l = 0..max_order: largest composed sup-norm, the largest
  // box bound, and the worst measured/bound ratio over all multi-indices.
  std::vector<double> measured;
  std::vector<double> bound;
  std::vector<double> ratio;
  double worst_ratio() const;
};

DerivativeBoundReport derivative_bound_check(const Nonlinearity& Q, const MixedField& f,
                                             int max_order = 3);

}  // namespace bilab
