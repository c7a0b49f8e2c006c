#include "bilab/error.hpp"
#include "bilab/nonlinearity.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace testing_support;

namespace {

// Q = a z + b.p + c q, linear in the jet.
class LinearQ final : public Nonlinearity {
 public:
  std::string name() const override { return "linear"; }
  JetDerivatives evaluate(const Site&, const Jet& j, int) const override {
    JetDerivatives d;
    d.value = 0.7 * j[kZ] - 0.3 * j[kP1] + 0.2 * j[kP2] + 1.1 * j[kQ];
    d.d1 = {0.7, -0.3, 0.2, 1.1};
    return d;
  }
};

// Q = z^2 q, whose third derivative d_zzq pairs the z and q groups.
class CrossQ final : public Nonlinearity {
 public:
  std::string name() const override { return "z2q"; }
  JetDerivatives evaluate(const Site&, const Jet& j, int) const override {
    JetDerivatives d;
    double z = j[kZ], q = j[kQ];
    d.value = z * z * q;
    d.d1[kZ] = 2 * z * q;
    d.d1[kQ] = z * z;
    d.d2[kZ][kZ] = 2 * q;
    d.d2[kZ][kQ] = d.d2[kQ][kZ] = 2 * z;
    d.d3[kZ][kZ][kQ] = d.d3[kZ][kQ][kZ] = d.d3[kQ][kZ][kZ] = 2.0;
    return d;
  }
};

std::vector<NonlinearityPtr> builtins() {
  return {make_zero(), make_power(3), make_power(4, 0.5, Gamma::bump), make_sine(1.3, Gamma::cosx),
          make_zq(0.8, Gamma::bump), make_pquad(1.0, Gamma::one)};
}

Jet random_jet(std::mt19937_64& rng, double s = 1.0) {
  std::uniform_real_distribution<double> U(-s, s);
  return {U(rng), U(rng), U(rng), U(rng)};
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("supplied partials match central differences") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double e = 1e-5;
  for (const auto& Q : builtins()) {
    CAPTURE(Q->name());
    for (int trial = 0; trial < 100; ++trial) {
      Site s{0, U(rng), U(rng)};
      Jet j = random_jet(rng);
      JetDerivatives d = Q->evaluate(s, j, 3);
      CHECK(d.value == doctest::Approx(Q->value(s, j)));
      for (int a = 0; a < 4; ++a) {
        Jet jp = j, jm = j;
        jp[a] += e;
        jm[a] -= e;
        JetDerivatives dp = Q->evaluate(s, jp, 3), dm = Q->evaluate(s, jm, 3);
        CHECK(close(d.d1[a], (dp.value - dm.value) / (2 * e), 1e-6));
        for (int b = 0; b < 4; ++b) {
          CHECK(close(d.d2[a][b], (dp.d1[b] - dm.d1[b]) / (2 * e), 1e-6));
          for (int c = 0; c < 4; ++c) CHECK(close(d.d3[a][b][c], (dp.d2[b][c] - dm.d2[b][c]) / (2 * e), 1e-6));
        }
      }
    }
  }
}

TEST_CASE("built-ins vanish at the zero jet") {
  Site s{0, 0.3, 0.6};
  for (const auto& Q : builtins()) CHECK(Q->value(s, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("spec parsing") {
  CHECK(make_nonlinearity({"power", {3}, Gamma::one})->name() == "power(k=3)");
  CHECK_THROWS_AS(make_nonlinearity({"power", {1}, Gamma::one}), PreconditionError);
  CHECK_THROWS_AS(make_nonlinearity({"power", {2.5}, Gamma::one}), PreconditionError);
  CHECK_THROWS_AS(make_nonlinearity({"cubic", {}, Gamma::one}), PreconditionError);
  CHECK(parse_gamma("cosx") == Gamma::cosx);
  CHECK_THROWS_AS(parse_gamma("gauss"), PreconditionError);
}

TEST_CASE("eval_Q examples") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(2);
  ScalarField u = random_smooth(g, rng);
  CHECK(eval_Q(*make_zero(), u).max_abs() == 0.0);
  ScalarField eight = eval_Q(*make_power(3), ScalarField(g, 2.0));
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(eight[k] == doctest::Approx(8.0));

  std::vector<double> err;
  for (int n : {17, 33, 65, 129}) {
    auto gg = DomainGrid::square(n);
    ScalarField f = sinsin(gg);
    ScalarField q = eval_Q(*make_zq(), f);
    double e = 0.0;
    for (std::size_t k = 0; k < gg->size(); ++k) e = std::max(e, std::abs(q[k] + 2 * pi * pi * f[k] * f[k]));
    err.push_back(e);
  }
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(observed_order(err[i - 1], err[i]) >= 1.9);
}

TEST_CASE("non-finite evaluation reports the node") {
  auto g = DomainGrid::square(9);
  ScalarField u(g, 1.0);
  u.at(3, 4) = 1e200;
  try {
    eval_Q(*make_power(3), u);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("(3,4)") != std::string::npos);
  }
}

TEST_CASE("linearized coefficients") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(3);
  MixedField w(random_smooth(g, rng));
  auto c0 = linearized_coeffs(*make_zero(), w);
  CHECK(c0.A.max_abs() == 0.0);
  CHECK(c0.X.max_abs() == 0.0);
  CHECK(c0.V.max_abs() == 0.0);
  auto c3 = linearized_coeffs(*make_power(3), w);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(c3.V[k] == doctest::Approx(3 * w.u[k] * w.u[k]));
  CHECK(c3.A.max_abs() == 0.0);
  auto czq = linearized_coeffs(*make_zq(), w);
  auto Q = make_zq();
  for (std::size_t k = 0; k < g->size(); ++k) {
    CHECK(czq.A[k] == doctest::Approx(w.u[k]));
    CHECK(czq.V[k] == doctest::Approx(w.m[k]));
    CHECK(czq.X.x()[k] == 0.0);
    // finite-difference oracle in the z slot
    Jet j = jet_at(w, k), jp = j, jm = j;
    jp[kZ] += 1e-6;
    jm[kZ] -= 1e-6;
    Site s = site_at(*g, k);
    CHECK(czq.V[k] == doctest::Approx((Q->value(s, jp) - Q->value(s, jm)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("remainder R examples") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(4);
  MixedField w(random_smooth(g, rng));
  MixedField h(random_smooth(g, rng, 0.1));
  CHECK(remainder_R(*make_sine(), w, MixedField::zero(g)).max_abs() == 0.0);
  LinearQ lin;
  CHECK(remainder_R(lin, w, h).max_abs() < 1e-15);
  ScalarField r3 = remainder_R(*make_power(3), MixedField::zero(g), h);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(r3[k] == doctest::Approx(std::pow(h.u[k], 3)).epsilon(1e-12));
  CHECK_THROWS_AS(remainder_R(*make_power(3), w, h, 1), PreconditionError);
}

TEST_CASE("taylor identity") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(6);
  MixedField w(random_smooth(g, rng));
  CHECK(taylor_identity_check(*make_power(3), w, MixedField::zero(g)).max_abs() < 1e-15);
  LinearQ lin;
  CHECK(taylor_identity_check(lin, w, MixedField(random_smooth(g, rng))).max_abs() < 1e-12);
  for (const auto& Q : builtins()) {
    CAPTURE(Q->name());
    MixedField h(random_smooth(g, rng, 0.05));
    CHECK(taylor_identity_check(*Q, w, h, 8).max_abs() < 1e-8);
  }
}

TEST_CASE("remainder difference expansion") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(7);
  MixedField w(random_smooth(g, rng, 0.5));
  MixedField v(random_smooth(g, rng, 0.05));
  MixedField r1(random_smooth(g, rng, 0.02));
  MixedField r2(random_smooth(g, rng, 0.02));
  auto same = remainder_difference_expansion(*make_power(3), w, v, r1, r1);
  CHECK(same.direct.max_abs() < 1e-15);
  CHECK(same.expanded.max_abs() < 1e-15);

  auto red = remainder_difference_expansion(*make_sine(), w, MixedField::zero(g), r1, MixedField::zero(g));
  CHECK((red.direct - remainder_R(*make_sine(), w, r1)).max_abs() < 1e-15);

  for (const auto& Q : builtins()) {
    CAPTURE(Q->name());
    auto ex = remainder_difference_expansion(*Q, w, v, r1, r2);
    CHECK(ex.cross_block.max_abs() < 1e-15);
    CHECK(ex.paper_mismatch() < 1e-7);
  }

  // A nonlinearity with a mixed (z, q) third derivative: the cross block is
  // what closes the identity.
  CrossQ cq;
  auto ex = remainder_difference_expansion(cq, w, v, r1, r2);
  CHECK(ex.cross_block.max_abs() > 1e-6);
  CHECK(ex.mismatch() < 1e-10);
}

TEST_CASE("remainder is quadratically small") {
  auto g = DomainGrid::square(33);
  std::mt19937_64 rng(8);
  MixedField w(ScalarField(g, 0.5));
  ScalarField dir = random_smooth(g, rng, 0.2);
  for (const auto& Q : {make_zq(), make_power(3)}) {
    std::vector<double> ratio;
    for (double s : {1.0, 0.5, 0.25, 0.125}) {
      MixedField h(s * dir);
      ratio.push_back(c2_norm(remainder_R(*Q, w, h)) / std::pow(c2_norm(h), 2));
    }
    for (std::size_t i = 1; i < ratio.size(); ++i) {
      CHECK(ratio[i] / ratio[i - 1] < 2.0);
      CHECK(ratio[i] / ratio[i - 1] > 0.5);
    }
  }
}

TEST_CASE("remainder is Lipschitz with a constant shrinking with the ball") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(9);
  MixedField w(random_smooth(g, rng, 0.3));
  ScalarField dv = random_smooth(g, rng), d1 = random_smooth(g, rng), d2 = random_smooth(g, rng);
  std::vector<double> consts;
  for (double delta : {0.1, 0.05, 0.025}) {
    MixedField v(delta * dv), r1(delta * d1), r2(delta * d2);
    double lhs = (remainder_R(*make_sine(), w, v + r1) - remainder_R(*make_sine(), w, v + r2)).max_abs();
    consts.push_back(lhs / c2_norm(r1 - r2));
  }
  CHECK(consts[1] < consts[0]);
  CHECK(consts[2] < consts[1]);
}

TEST_CASE("derivative bounds over the box") {
  auto g = DomainGrid::square(17);
  std::mt19937_64 rng(10);
  MixedField f(random_smooth(g, rng));
  auto rz = derivative_bound_check(*make_zero(), f);
  for (double m : rz.measured) CHECK(m == 0.0);

  auto rp = derivative_bound_check(*make_power(3), f);
  CHECK(rp.worst_ratio() <= 1.0 + 1e-12);
  double M = c2_norm(f);
  double sup_dz = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) sup_dz = std::max(sup_dz, 3 * f.u[k] * f.u[k]);
  CHECK(sup_dz <= 3 * M * M);
  CHECK(rp.measured[1] == doctest::Approx(sup_dz));

  // The closed-form box bound of the sine kind must dominate a dense sample.
  auto Q = make_sine(1.0, Gamma::cosx);
  for (std::size_t k : {std::size_t{0}, std::size_t{40}, std::size_t{140}}) {
    Site s = site_at(*g, k);
    JetDerivatives b = Q->box_bound(s, M);
    double best0 = 0, best1 = 0;
    for (int i = 0; i <= 400; ++i) {
      double z = -M + 2 * M * i / 400.0;
      JetDerivatives d = Q->evaluate(s, {z, 0, 0, 0}, 3);
      best0 = std::max(best0, std::abs(d.value));
      best1 = std::max(best1, std::abs(d.d1[kZ]));
    }
    CHECK(best0 <= b.value + 1e-12);
    CHECK(best1 <= b.d1[kZ] + 1e-12);
    CHECK(best1 == doctest::Approx(b.d1[kZ]).epsilon(1e-9));
  }
  CHECK(derivative_bound_check(*Q, f).worst_ratio() <= 1.0 + 1e-12);
  for (const auto& q : builtins()) CHECK(derivative_bound_check(*q, f).worst_ratio() <= 1.0 + 1e-12);
}
