#include "bilab/gauge.hpp"

#include <cmath>
#include <sstream>

#include "bilab/cauchy.hpp"
#include "bilab/error.hpp"

namespace bilab {

namespace {

class Gauge final : public Nonlinearity {
 public:
  Gauge(NonlinearityPtr inner, const ScalarField& phi)
      : inner_(std::move(inner)), phi_(phi), grad_(gradient(phi)), lap_(laplacian(phi)),
        bih_(laplacian(lap_)) {}

  std::string name() const override { return "gauge(" + inner_->name() + ")"; }

  JetDerivatives evaluate(const Site& site, const Jet& jet, int order) const override {
    std::size_t k = check_site(site);
    JetDerivatives d = inner_->evaluate(site, shifted(k, jet), order);
    d.value += bih_[k];
    return d;
  }

  JetDerivatives box_bound(const Site& site, double M) const override {
    std::size_t k = check_site(site);
    double shift = std::max({std::abs(phi_[k]), std::abs(grad_.x()[k]), std::abs(grad_.y()[k]),
                             std::abs(lap_[k])});
    JetDerivatives d = inner_->box_bound(site, M + shift);
    d.value += std::abs(bih_[k]);
    return d;
  }

 private:
  std::size_t check_site(const Site& s) const {
    const DomainGrid& g = phi_.grid();
    if (s.node >= g.size() || std::abs(g.x_of(s.node) - s.x) > 1e-12 ||
        std::abs(g.y_of(s.node) - s.y) > 1e-12) {
      std::ostringstream os;
      os << "gauge transform evaluated off its grid at (" << s.x << "," << s.y << ")";
      throw PreconditionError(os.str());
    }
    return s.node;
  }

  Jet shifted(std::size_t k, const Jet& j) const {
    return {j[kZ] + phi_[k], j[kP1] + grad_.x()[k], j[kP2] + grad_.y()[k], j[kQ] + lap_[k]};
  }

  NonlinearityPtr inner_;
  ScalarField phi_;
  VectorField grad_;
  ScalarField lap_;
  ScalarField bih_;
};

}  // namespace

NonlinearityPtr gauge_transform(NonlinearityPtr Q, const ScalarField& phi) {
  if (!Q) throw PreconditionError("gauge_transform: null nonlinearity");
  if (!phi.all_finite()) throw PreconditionError("gauge_transform: phi is not finite");
  double cn = cauchy_norm(cauchy_data(phi));
  if (cn > 1e-12 * (1.0 + c2_norm(phi))) {
    std::ostringstream os;
    os << "gauge_transform: phi is not clamped (Cauchy norm " << cn << ")";
    throw PreconditionError(os.str());
  }
  return std::make_shared<Gauge>(std::move(Q), phi);
}

ScalarField radial_bump(const GridPtr& g, double amplitude, double cx, double cy, double radius) {
  if (!(radius > 0)) throw PreconditionError("radial_bump needs radius > 0");
  return ScalarField::from_function(g, [=](double x, double y) {
    double rho2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (radius * radius);
    if (rho2 >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - rho2));
  });
}

}  // namespace bilab
