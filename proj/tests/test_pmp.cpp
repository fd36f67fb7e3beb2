#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "singarc/arm2dof.hpp"
#include "singarc/errors.hpp"
#include "singarc/pmp.hpp"

using namespace singarc;

namespace {

struct PairSampler {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> angle{-std::numbers::pi, std::numbers::pi};
  std::uniform_real_distribution<double> rate{-2.0, 2.0};
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit PairSampler(std::uint64_t seed) : rng(seed) {}
  Eigen::VectorXd state() {
    Eigen::VectorXd x(4);
    x << angle(rng), angle(rng), rate(rng), rate(rng);
    return x;
  }
  Eigen::VectorXd costate() {
    Eigen::VectorXd l(4);
    for (int i = 0; i < 4; ++i) l[i] = normal(rng);
    return l;
  }
};

}  // namespace

TEST_CASE("hamiltonian") {
  const Arm2Dof arm;
  Eigen::VectorXd x(4), u(2);
  x << 0.1, 0.5, 0.3, -0.2;
  u << 4.0, -10.0;
  SUBCASE("zero costate gives −1") { CHECK(hamiltonian(arm, x, u, Eigen::VectorXd::Zero(4)) == -1.0); }
  SUBCASE("affine in the costate") {
    Eigen::VectorXd l(4);
    l << 1.0, -2.0, 0.5, 3.0;
    const double h1 = hamiltonian(arm, x, u, l);
    const double h3 = hamiltonian(arm, x, u, 3.0 * l);
    CHECK(h3 + 1.0 == doctest::Approx(3.0 * (h1 + 1.0)).epsilon(1e-14));
  }
  SUBCASE("switching functions are its control gradient") {
    Eigen::VectorXd l(4);
    l << 0.7, -0.2, 1.5, 2.0;
    const SwitchingRecord rec = switching(arm, x, l);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd du = Eigen::VectorXd::Zero(2);
      du[i] = 1.0;
      CHECK(hamiltonian(arm, x, u + du, l) - hamiltonian(arm, x, u, l) == doctest::Approx(rec.phi[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("adjoint matches the finite-difference Jacobian") {
  const Arm2Dof arm;
  const oracle::Arm ref;
  PairSampler sample(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = sample.state();
    const Eigen::VectorXd l = sample.costate();
    const Eigen::Vector2d u(7.0 * sample.normal(sample.rng), 4.0 * sample.normal(sample.rng));
    const Eigen::VectorXd exact = adjoint_rhs(arm, x, u, l);
    const Eigen::VectorXd fd = oracle::to_double(oracle::adjoint(ref, oracle::to_long(x), oracle::to_long(l), u[0], u[1]));
    CHECK((exact - fd).norm() <= 1e-7 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("switching derivatives follow the flow") {
  const Arm2Dof arm;
  PairSampler sample(32);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = sample.state();
    const Eigen::VectorXd l = sample.costate();
    const Eigen::Vector2d u(15.0 * (sample.angle(sample.rng) / std::numbers::pi), -10.0);
    // Short state–costate flow with u frozen; φ' and φ'' by differences in time.
    const auto phi_at = [&](double tau) {
      Eigen::VectorXd z(8);
      z << x, l;
      const int steps = 8;
      for (int k = 0; k < steps; ++k) z = fixtures::bang_step(arm, z, u, tau / steps);
      return switching(arm, z.head(4), z.tail(4)).phi;
    };
    const double h = 1e-3;
    const Eigen::VectorXd pp = phi_at(2 * h), p = phi_at(h), m = phi_at(-h), mm = phi_at(-2 * h), c = phi_at(0.0);
    const Eigen::VectorXd d1 = (-pp + 8 * p - 8 * m + mm) / (12 * h);
    const Eigen::VectorXd d2 = (-pp + 16 * p - 30 * c + 16 * m - mm) / (12 * h * h);
    const SwitchingRecord rec = switching(arm, x, l);
    CHECK((rec.phi_dot - d1).norm() <= 1e-7 * std::max(1.0, d1.norm()));
    const Eigen::VectorXd second = switching_second_derivative(arm, x, l, u);
    CHECK((second - d2).norm() <= 1e-4 * std::max(1.0, d2.norm()));
  }
}

TEST_CASE("bang control selects the bound by the switching sign") {
  const ControlBounds b = arm_default_bounds();
  SwitchingRecord rec;
  rec.phi = Eigen::Vector2d(0.3, -2.0);
  rec.phi_dot = Eigen::Vector2d::Zero();
  auto ch = bang_control(rec, b, 1e-6);
  CHECK(ch[0].tag == ChannelTag::kUpper);
  CHECK(*ch[0].value == 20.0);
  CHECK(ch[1].tag == ChannelTag::kLower);
  CHECK(*ch[1].value == -10.0);
  rec.phi[0] = 1e-9;
  ch = bang_control(rec, b, 1e-6);
  CHECK(ch[0].tag == ChannelTag::kSingularUndetermined);
  CHECK_FALSE(ch[0].value.has_value());
  CHECK(singular_band(Eigen::Vector4d(0, 0, 30, 40)) == doctest::Approx(50e-6));
  CHECK(singular_band(Eigen::Vector4d(0, 0, 0, 0.1)) == doctest::Approx(1e-6));
}

TEST_CASE("lemma1_certificate") {
  const Arm2Dof arm;
  PairSampler sample(33);
  for (int trial = 0; trial < 500; ++trial) {
    CHECK(lemma1_certificate(arm, sample.state(), sample.costate()));
  }
  CHECK_FALSE(lemma1_certificate(arm, sample.state(), Eigen::VectorXd::Zero(4)));
}

TEST_CASE("projected costates lie on the singular surface") {
  const Arm2Dof arm;
  PairSampler sample(34);
  int checked = 0;
  while (checked < 100) {
    const Eigen::VectorXd x = sample.state();
    if (!in_Rk(x)) continue;
    const Eigen::VectorXd l = project_costate_to_singular_surface(arm, x, sample.costate());
    const SwitchingRecord rec = switching(arm, x, l);
    CHECK(std::abs(rec.phi[0]) <= 1e-12 * l.norm());
    CHECK(std::abs(rec.phi_dot[0]) <= 1e-12 * l.norm());
    ++checked;
  }
}

TEST_CASE("closed-form singular control") {
  const Arm2Dof arm;
  const oracle::Arm ref;
  PairSampler sample(35);
  int checked = 0;
  while (checked < 100) {
    const Eigen::VectorXd x = sample.state();
    if (!in_Rk(x, RkBand{0.05, 0.05})) continue;
    const Eigen::VectorXd l = project_costate_to_singular_surface(arm, x, sample.costate());
    const double c = checked % 2 ? -10.0 : 10.0;
    const double u1 = singular_u1(arm, x, l, c);

    // keeps the second derivative of phi1 at zero
    {
      const Eigen::VectorXd second = switching_second_derivative(arm, x, l, Eigen::Vector2d(u1, c));
      CHECK(std::abs(second[0]) <= 1e-9 * std::max(1.0, l.norm()) * std::max(1.0, std::abs(u1)));
    }
    // agrees with the time-derivative oracle
    {
      const double expected = static_cast<double>(oracle::singular_u1(ref, oracle::to_long(x), oracle::to_long(l), c));
      CHECK(u1 == doctest::Approx(expected).epsilon(1e-6).scale(1.0));
    }
    // depends on the costate through lambda2/lambda4 only
    {
      CHECK(singular_u1(arm, x, -2.5 * l, c) == doctest::Approx(u1).epsilon(1e-12));
      const SingularLawCoeffs k = singular_law_coeffs(arm, x, c);
      CHECK(k.r * l[1] / l[3] + k.s == doctest::Approx(u1).epsilon(1e-12));
    }
    // matches the general linear system with the bang channel held
    {
      const Eigen::VectorXd ubar = general_singular_solve(arm, x, l, 1, c);
      REQUIRE(ubar.size() == 1);
      CHECK(ubar[0] == doctest::Approx(u1).epsilon(1e-9).scale(1.0));
    }
    ++checked;
  }
}

TEST_CASE("law coefficients at the degenerate angles") {
  const Arm2Dof arm;
  Eigen::VectorXd x(4);
  for (const double q2 : {0.0, std::numbers::pi / 2, -std::numbers::pi / 2, std::numbers::pi}) {
    x << 0.3, q2, 0.5, 0.2;
    CHECK_THROWS_AS(singular_law_coeffs(arm, x, -10.0), RkViolation);
  }
  x << 0.3, std::numbers::pi / 2, 0.5, 0.2;
  Eigen::VectorXd l(4);
  l << 1.0, 3.0, 10.0, 6.0;
  CHECK_THROWS_AS(singular_u1(arm, x, l, -10.0), RkViolation);
}

TEST_CASE("costate degeneracy") {
  const Arm2Dof arm;
  Eigen::VectorXd x(4), l(4);
  x << std::numbers::pi / 20, std::numbers::pi / 20, 0.3, 0.5;
  l << 1.0, 3.0, 2.0, 0.0;
  CHECK_THROWS_AS(singular_u1(arm, x, l, -10.0), CostateDegenerate);
  CHECK_THROWS_AS(singular_u1(arm, x, Eigen::VectorXd::Zero(4), -10.0), CostateDegenerate);
}

TEST_CASE("general singular system degeneracies") {
  const Arm2Dof arm;
  Eigen::VectorXd x(4), l(4);
  x << 0.3, std::numbers::pi / 2, 0.5, 0.2;
  l << 1.0, 3.0, 10.0, 6.0;
  CHECK_THROWS_AS(general_singular_solve(arm, x, l, 1, -10.0), DegenerateSystem);

  x << 0.3, 0.7, 0.5, 0.2;
  // φ2 = 0: the singular channel's coefficient A_k φ_k vanishes.
  const Eigen::MatrixXd g = input_columns(arm, x);
  l = g * (g.transpose() * g).inverse() * Eigen::Vector2d(0.4, 0.0);
  CHECK_THROWS_AS(general_singular_solve(arm, x, l, 1, -10.0), DegenerateSystem);
  CHECK_THROWS_AS(general_singular_system(arm, x, l, 2, -10.0), std::out_of_range);

  const GeneralSingularSystem s = general_singular_system(arm, x, l, 1, -10.0);
  CHECK(s.a_k.rows() == 1);
  CHECK(s.delta == doctest::Approx(alpha_coefficients(arm, x)(0, 0, 1)));
}

TEST_CASE("admissible set membership") {
  Eigen::VectorXd x(4);
  x << std::numbers::pi / 20, std::numbers::pi / 20, 0.30, 0.5;
  CHECK(in_Rk(x));
  x << 0.0, std::numbers::pi / 20, 0.3, -0.3;
  CHECK_FALSE(in_Rk(x));
  x << 0.0, std::numbers::pi / 2, 0.3, 0.5;
  CHECK_FALSE(in_Rk(x));
  x << 0.0, -std::numbers::pi, 0.3, 0.5;
  CHECK_FALSE(in_Rk(x));
  x << 0.0, 0.0, 0.3, 0.5;
  CHECK_FALSE(in_Rk(x));
  x << 0.0, 0.002, 0.3, 0.5;
  CHECK(in_Rk(x));
  CHECK_FALSE(in_Rk(x, RkBand{0.01, 1e-3}));
}

TEST_CASE("S_k rank loss tracks the admissible set") {
  const Arm2Dof arm;
  Eigen::VectorXd x(4);
  x << 0.2, 0.8, 0.6, 0.3;
  CHECK(sk_rank(arm, x, 1) > 1e-4);
  x << 0.2, 0.8, 0.6, -0.6;  // θ̇1 + θ̇2 = 0
  CHECK(sk_rank(arm, x, 1) <= 1e-10);
}
