#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/errors.hpp"
#include "gwlab/ode.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace gwlab;

TEST_CASE("exponential decay") {
    std::vector<double> y = {1.0};
    const auto st = integrate_dopri5([](double, std::span<const double> v, std::span<double> d) { d[0] = -v[0]; }, 0.0,
                                     1.0, y);
    CHECK(y[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(st.accepted > 0);
    CHECK(st.evaluations >= 6 * st.accepted);
}

TEST_CASE("Riccati equation with a tanh solution") {
    std::vector<double> y = {0.0};
    integrate_dopri5([](double, std::span<const double> v, std::span<double> d) { d[0] = 1.0 - v[0] * v[0]; }, 0.0,
                     3.0, y);
    CHECK(y[0] == doctest::Approx(std::tanh(3.0)).epsilon(1e-9));
}

TEST_CASE("harmonic oscillator returns to its start") {
    std::vector<double> y = {1.0, 0.0};
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    integrate_dopri5(
        [](double, std::span<const double> v, std::span<double> d) {
            d[0] = v[1];
            d[1] = -v[0];
        },
        0.0, 2.0 * std::numbers::pi, y, o);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(y[1]) < 1e-9);
}

TEST_CASE("integrates backwards in time") {
    std::vector<double> y = {std::exp(-2.0)};
    integrate_dopri5([](double, std::span<const double> v, std::span<double> d) { d[0] = -v[0]; }, 2.0, 0.0, y);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("time-dependent right-hand side") {
    std::vector<double> y = {0.0};
    integrate_dopri5([](double t, std::span<const double>, std::span<double> d) { d[0] = std::cos(t); }, 0.0, 1.0, y);
    CHECK(y[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-10));
}

TEST_CASE("zero-length interval leaves the state alone") {
    std::vector<double> y = {3.0};
    const auto st = integrate_dopri5([](double, std::span<const double>, std::span<double> d) { d[0] = 1.0; }, 1.0,
                                     1.0, y);
    CHECK(y[0] == 3.0);
    CHECK(st.accepted == 0);
}

TEST_CASE("blow-up and exhausted budgets are solver errors") {
    std::vector<double> y = {1.0};
    CHECK_THROWS_AS(
        integrate_dopri5([](double, std::span<const double> v, std::span<double> d) { d[0] = v[0] * v[0]; }, 0.0, 2.0,
                         y),
        SolverError);
    std::vector<double> z = {1.0};
    OdeOptions o;
    o.max_steps = 3;
    CHECK_THROWS_AS(integrate_dopri5([](double t, std::span<const double>, std::span<double> d) { d[0] = std::sin(50 * t); },
                                     0.0, 100.0, z, o),
                    SolverError);
}
