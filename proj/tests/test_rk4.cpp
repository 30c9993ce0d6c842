#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "l1switch/rk4.hpp"

using namespace l1switch;

TEST_CASE("zero derivative leaves the state untouched", "[rk4]") {
    auto deriv = [](double, const Vector& y) { return Vector::Zero(y.size()).eval(); };
    const Vector y0 = Vector::Constant(1, 1.0);
    const Vector y1 = rk4_step(deriv, 0.0, y0, 0.1);
    REQUIRE(y1[0] == 1.0);
}

TEST_CASE("exponential growth matches the degree-4 Taylor value", "[rk4]") {
    auto deriv = [](double, const Vector& y) { return y; };
    const Vector y1 = rk4_step(deriv, 0.0, Vector::Constant(1, 1.0), 0.1);
    // 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1
    REQUIRE(y1[0] == Catch::Approx(1.1051708333333332).epsilon(1e-14));
    REQUIRE(std::abs(y1[0] - std::exp(0.1)) < 1e-7);
}

TEST_CASE("single-step error falls ~32x when the step halves", "[rk4]") {
    auto deriv = [](double, const Vector& y) { return (-y).eval(); };
    auto local_error = [&](double h) {
        const Vector y1 = rk4_step(deriv, 0.0, Vector::Constant(1, 1.0), h);
        return std::abs(y1[0] - std::exp(-h));
    };
    const double ratio = local_error(0.1) / local_error(0.05);
    REQUIRE(ratio > 28.0);
    REQUIRE(ratio < 36.0);
}

TEST_CASE("end-time error falls ~16x per halving on a linear system", "[rk4]") {
    auto deriv = [](double, const Vector& y) { return (-y).eval(); };
    auto end_error = [&](double h) {
        Vector y = Vector::Constant(1, 1.0);
        const auto steps = static_cast<long>(std::llround(1.0 / h));
        Rk4Workspace ws;
        ws.resize(1);
        auto wrapped = [&](double t, const Vector& yy, Vector& dy) { dy = deriv(t, yy); };
        for (long k = 0; k < steps; ++k)
            rk4_step_inplace(wrapped, static_cast<double>(k) * h, y, h, ws);
        return std::abs(y[0] - std::exp(-1.0));
    };
    double h = 0.1;
    double prev = end_error(h);
    for (int halving = 0; halving < 4; ++halving) {
        h *= 0.5;
        const double next = end_error(h);
        const double factor = prev / next;
        REQUIRE(factor > 12.0);
        REQUIRE(factor < 20.0);
        prev = next;
    }
}

TEST_CASE("non-finite derivative aborts with the offending time", "[rk4]") {
    auto deriv = [](double t, const Vector& y) {
        return t > 0.05 ? Vector::Constant(y.size(), std::nan("")).eval() : y;
    };
    try {
        (void)rk4_step(deriv, 0.0, Vector::Constant(1, 1.0), 0.2);
        FAIL("expected SimulationError");
    } catch (const SimulationError& err) {
        REQUIRE(err.time == 0.0);  // step start time is reported
    }
}
