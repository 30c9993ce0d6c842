#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "l1switch/aircraft.hpp"
#include "l1switch/controller.hpp"
#include "l1switch/filter.hpp"

using namespace l1switch;

namespace {

LtiSubsystem unit_system(int n, int m) {
    LtiSubsystem sys;
    sys.A = -Matrix::Identity(n, n);
    sys.B = Matrix::Identity(n, m);
    sys.C = Matrix::Identity(m, n);
    sys.label = "unit";
    return sys;
}

}  // namespace

TEST_CASE("constant-gain filter has no state and gain D", "[filter]") {
    const FilterSpec f = FilterSpec::constant_gain(4.0 * std::acos(-1.0), 1);
    REQUIRE(f.n_f() == 0);
    REQUIRE(f.D(0, 0) == Catch::Approx(4.0 * std::acos(-1.0)));
    REQUIRE_NOTHROW(f.validate());
    REQUIRE(f.dc_gain()(0, 0) == f.D(0, 0));
}

TEST_CASE("unstable filter realizations are rejected", "[filter]") {
    FilterSpec f;
    f.A = Matrix{{0.5}};
    f.B = Matrix{{1.0}};
    f.C = Matrix{{1.0}};
    f.D = Matrix{{0.0}};
    REQUIRE_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("closed filter loop has identity DC gain", "[filter][controller]") {
    const FilterSpec constant = FilterSpec::constant_gain(4.0 * std::acos(-1.0), 1);
    REQUIRE(closed_loop_filter_dc_check(constant, Matrix{{1.0}})(0, 0) == Catch::Approx(1.0));
    REQUIRE(closed_loop_filter_dc_check(constant, Matrix{{0.5}})(0, 0) == Catch::Approx(1.0));

    // first-order D0(s) = 10 / (s + 1)
    FilterSpec first_order;
    first_order.A = Matrix{{-1.0}};
    first_order.B = Matrix{{1.0}};
    first_order.C = Matrix{{10.0}};
    first_order.D = Matrix{{0.0}};
    first_order.validate();
    REQUIRE(closed_loop_filter_dc_check(first_order, Matrix{{1.0}})(0, 0) == Catch::Approx(1.0));

    // numerical limit at s = 1e-9 agrees
    const std::complex<double> s(1e-9, 0.0);
    const auto d0 = first_order.eval(s);
    const std::complex<double> c_num = 1.0 * d0(0, 0) / (s + d0(0, 0) * 1.0);
    REQUIRE(std::abs(c_num - 1.0) < 1e-8);

    FilterSpec zero = FilterSpec::constant_gain(0.0, 1);
    REQUIRE_THROWS_AS(closed_loop_filter_dc_check(zero, Matrix{{1.0}}), ConfigError);
}

TEST_CASE("dc feedforward gain m=1 hand cases", "[controller]") {
    REQUIRE(dc_feedforward_gain(unit_system(2, 2)).isApprox(Matrix::Identity(2, 2), 1e-14));

    LtiSubsystem sys;
    sys.A = Matrix{{0.0, 1.0}, {-2.0, -3.0}};
    sys.B = Matrix{{0.0}, {1.0}};
    sys.C = Matrix{{1.0, 0.0}};
    sys.label = "dc";
    // A z = B gives z = [-1/2; 0], so C A^-1 B = -1/2 and k = 2
    REQUIRE(dc_feedforward_gain(sys)(0, 0) == Catch::Approx(2.0).epsilon(1e-14));

    LtiSubsystem doubled = sys;
    doubled.B *= 2.0;
    REQUIRE(dc_feedforward_gain(doubled)(0, 0) ==
            Catch::Approx(0.5 * dc_feedforward_gain(sys)(0, 0)).epsilon(1e-14));

    LtiSubsystem singular = sys;
    singular.A = Matrix{{0.0, 1.0}, {0.0, -3.0}};
    REQUIRE_THROWS_WITH(dc_feedforward_gain(singular),
                        Catch::Matchers::ContainsSubstring("singular"));
}

TEST_CASE("predictor derivative follows the estimate-driven copy", "[controller]") {
    const auto family = aircraft_short_period_family();
    const LtiSubsystem& sys = family.back();  // 137 kt
    ControllerState state = ControllerState::initial(Vector::Zero(2), 1, FilterSpec::constant_gain(1.0, 1));
    state.x_hat = Vector{{1.0, 0.0}};
    state.theta_hat = Matrix{{0.5}, {0.5}};
    state.sigma_hat = Vector::Constant(1, 2.0);
    state.omega_hat = Matrix{{1.0}};
    const Vector x = Vector{{1.0, 1.0}};
    const Vector u = Vector::Constant(1, 1.0);
    const Vector d = predictor_derivative(state, x, u, sys);
    // A137 [1;0] + B137 (1 + 1 + 2)
    REQUIRE(d[0] == Catch::Approx(-0.5147 + 4.0 * -0.0006).epsilon(1e-14));
    REQUIRE(d[1] == Catch::Approx(-0.6219 + 4.0 * -0.0115).epsilon(1e-14));

    // matching estimates and state reproduce the plant right-hand side
    state.x_hat = x;
    const Vector plant_rhs = sys.A * x + sys.B * (state.omega_hat * u +
                                                  state.theta_hat.transpose() * x + state.sigma_hat);
    REQUIRE(predictor_derivative(state, x, u, sys) == plant_rhs);

    // zero estimates under zero input leave only A x_hat
    ControllerState quiet = ControllerState::initial(Vector{{1.0, -2.0}}, 1,
                                                     FilterSpec::constant_gain(1.0, 1));
    quiet.omega_hat.setZero();
    REQUIRE(predictor_derivative(quiet, Vector::Zero(2), Vector::Zero(1), sys) ==
            sys.A * Vector{{1.0, -2.0}});
}

TEST_CASE("adaptation derivatives reproduce the hand-evaluated gradient", "[controller]") {
    LtiSubsystem sys;
    sys.A = -Matrix::Identity(2, 2);
    sys.B = Matrix{{0.0}, {1.0}};
    sys.C = Matrix{{1.0, 0.0}};
    sys.label = "hand";
    const Matrix p = Matrix::Identity(2, 2);
    const FilterSpec filter = FilterSpec::constant_gain(1.0, 1);
    ControllerState state = ControllerState::initial(Vector::Zero(2), 1, filter);

    ProjectionSet proj;
    proj.theta = {{100.0, 0.1}};
    proj.sigma = {100.0, 0.1};
    proj.omega = {{100.0, 0.1}};

    const Vector x_tilde = Vector{{0.0, 1.0}};
    const Vector x = Vector{{1.0, 2.0}};
    const Vector u = Vector::Constant(1, 3.0);
    const auto d = adaptation_derivatives(x_tilde, x, u, state, sys, p, 10.0, proj);
    REQUIRE(d.d_theta(0, 0) == Catch::Approx(-10.0).epsilon(1e-14));
    REQUIRE(d.d_theta(1, 0) == Catch::Approx(-20.0).epsilon(1e-14));
    REQUIRE(d.d_sigma[0] == Catch::Approx(-10.0).epsilon(1e-14));
    REQUIRE(d.d_omega(0, 0) == Catch::Approx(-30.0).epsilon(1e-14));

    const auto zero = adaptation_derivatives(Vector::Zero(2), x, u, state, sys, p, 10.0, proj);
    REQUIRE(zero.d_theta.isZero(0.0));
    REQUIRE(zero.d_sigma.isZero(0.0));
    REQUIRE(zero.d_omega.isZero(0.0));
}

TEST_CASE("filter cascade realizes -D0(s)/s", "[controller]") {
    const double df = 4.0 * std::acos(-1.0);
    const FilterSpec constant = FilterSpec::constant_gain(df, 1);
    ControllerState state = ControllerState::initial(Vector::Zero(2), 1, constant);

    const auto rest = control_filter_derivative(state, Vector::Zero(1), constant);
    REQUIRE(rest.d_x_I.isZero(0.0));

    // constant mu = c integrates to x_I = D0 c t exactly for the pure gain
    const auto kick = control_filter_derivative(state, Vector::Constant(1, 2.0), constant);
    REQUIRE(kick.d_x_I[0] == Catch::Approx(df * 2.0).epsilon(1e-14));

    // frequency response of the realized map mu -> u equals -D0(jw)/(jw)
    FilterSpec first_order;
    first_order.A = Matrix{{-1.0}};
    first_order.B = Matrix{{1.0}};
    first_order.C = Matrix{{10.0}};
    first_order.D = Matrix{{0.0}};
    for (double w : {0.1, 1.0, 10.0}) {
        const std::complex<double> s(0.0, w);
        // cascade state space: z = [x_f; x_I], dz = [[A_f,0],[C_f,0]] z + [B_f; D_f] mu,
        // u = [0, -1] z
        Eigen::MatrixXcd a_cas(2, 2);
        a_cas << std::complex<double>(-1.0), std::complex<double>(0.0),
            std::complex<double>(10.0), std::complex<double>(0.0);
        Eigen::VectorXcd b_cas(2);
        b_cas << std::complex<double>(1.0), std::complex<double>(0.0);
        Eigen::RowVectorXcd c_cas(2);
        c_cas << std::complex<double>(0.0), std::complex<double>(-1.0);
        const Eigen::MatrixXcd resolvent =
            (s * Eigen::MatrixXcd::Identity(2, 2) - a_cas).partialPivLu().solve(
                Eigen::MatrixXcd(b_cas));
        const std::complex<double> realized = (c_cas * resolvent)(0, 0);
        const std::complex<double> expected = -first_order.eval(s)(0, 0) / s;
        REQUIRE(std::abs(realized - expected) < 1e-9);
    }
}
