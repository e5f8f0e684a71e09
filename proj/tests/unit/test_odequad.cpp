#include <gtest/gtest.h>

#include <cmath>

#include "mfg/error.hpp"
#include "mfg/odequad.hpp"

using namespace mfg;

namespace {

double rk4_exp_error(std::size_t steps) {
    const TimeGrid g(1.0, steps);
    const auto y = rk4_integrate(g, [](double, double v) { return v; }, 1.0, Direction::forward);
    return std::abs(y.back() - std::exp(1.0));
}

double trapezoid_sin_error(std::size_t steps) {
    const TimeGrid g(1.0, steps);
    GridCurve f = GridCurve::filled(g, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(g.time(i));
    return std::abs(trapezoid_cumulative(f, Anchor::left).back() - (1.0 - std::cos(1.0)));
}

}  // namespace

TEST(Rk4, ZeroDynamicsBackwardIsConstant) {
    const TimeGrid g(1.0, 50);
    const auto y = rk4_integrate(g, [](double, double) { return 0.0; }, 1.0, Direction::backward);
    for (double v : y.values) EXPECT_EQ(v, 1.0);
}

TEST(Rk4, ExponentialGrowth) { EXPECT_LT(rk4_exp_error(1000), 1e-10); }

TEST(Rk4, QuadraticForward) {
    const TimeGrid g(0.5, 1000);
    const auto y = rk4_integrate(g, [](double, double v) { return v * v; }, 1.0, Direction::forward);
    EXPECT_NEAR(y.back(), 2.0, 1e-8);
}

TEST(Rk4, BackwardQuadraticMatchesAnalytic) {
    // y' = y^2, y(T) = 1 has y(t) = 1 / (1 + T - t)
    const TimeGrid g(1.0, 1000);
    const auto y = rk4_integrate(g, [](double, double v) { return v * v; }, 1.0, Direction::backward);
    EXPECT_NEAR(y[0], 0.5, 1e-8);
    EXPECT_EQ(y.back(), 1.0);
}

TEST(Rk4, FourthOrderConvergence) {
    EXPECT_GE(std::log2(rk4_exp_error(10) / rk4_exp_error(20)), 3.9);
    EXPECT_GE(std::log2(rk4_exp_error(20) / rk4_exp_error(40)), 3.9);
}

TEST(Rk4, BlowUpReportsFirstBadKnot) {
    // y' = y^4 from y(0) = 1e3 has a pole just after t = 0.
    const TimeGrid g(1.0, 1000);
    try {
        rk4_integrate(g, [](double, double v) { return v * v * v * v; }, 1e3, Direction::forward);
        FAIL() << "expected BlowUpError";
    } catch (const BlowUpError& e) {
        EXPECT_EQ(e.knot(), 1u);
    }
}

TEST(Trapezoid, ZeroIntegrand) {
    const TimeGrid g(1.0, 10);
    for (double v : trapezoid_cumulative(GridCurve::filled(g, 0.0), Anchor::right).values) EXPECT_EQ(v, 0.0);
}

TEST(Trapezoid, ConstantIsExact) {
    const TimeGrid g(2.0, 8);
    const auto r = trapezoid_cumulative(GridCurve::filled(g, 3.0), Anchor::right);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r[i], 3.0 * (2.0 - g.time(i)), 1e-15);
}

TEST(Trapezoid, LinearIntegrand) {
    const TimeGrid g(1.0, 1000);
    GridCurve f = GridCurve::filled(g, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = g.time(i);
    EXPECT_NEAR(trapezoid_cumulative(f, Anchor::right)[0], 0.5, 1e-9);
}

TEST(Trapezoid, SecondOrderConvergence) {
    EXPECT_GE(std::log2(trapezoid_sin_error(50) / trapezoid_sin_error(100)), 1.9);
}

TEST(Trapezoid, AnchorsAreComplementary) {
    const TimeGrid g(1.0, 100);
    GridCurve f = GridCurve::filled(g, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(3.0 * g.time(i));
    const auto left = trapezoid_cumulative(f, Anchor::left);
    const auto right = trapezoid_cumulative(f, Anchor::right);
    EXPECT_EQ(left[0], 0.0);
    EXPECT_EQ(right.back(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(left[i] + right[i], left.back(), 1e-12);
}
