#include <gtest/gtest.h>

#include "mfg/error.hpp"
#include "mfg/grid.hpp"

using namespace mfg;

TEST(TimeGrid, KnotsAndSpacing) {
    const TimeGrid g(2.0, 4);
    EXPECT_EQ(g.knots(), 5u);
    EXPECT_DOUBLE_EQ(g.dt(), 0.5);
    EXPECT_EQ(g.time(0), 0.0);
    EXPECT_EQ(g.time(4), 2.0);
    EXPECT_DOUBLE_EQ(g.time(3), 1.5);
}

TEST(TimeGrid, LastKnotIsExactlyTheHorizon) {
    const TimeGrid g(0.7, 3000);
    EXPECT_EQ(g.time(3000), 0.7);
}

TEST(TimeGrid, RejectsBadShape) {
    EXPECT_THROW(TimeGrid(0.0, 10), StructuralError);
    EXPECT_THROW(TimeGrid(-1.0, 10), StructuralError);
    EXPECT_THROW(TimeGrid(1.0, 0), StructuralError);
}

TEST(TimeGrid, Locate) {
    const TimeGrid g(1.0, 4);
    auto [i, f] = g.locate(0.3);
    EXPECT_EQ(i, 1u);
    EXPECT_NEAR(f, 0.2, 1e-12);
    std::tie(i, f) = g.locate(1.0);
    EXPECT_EQ(i, 3u);
    EXPECT_EQ(f, 1.0);
    EXPECT_THROW(g.locate(-1e-9), DomainError);
    EXPECT_THROW(g.locate(1.0 + 1e-9), DomainError);
}

TEST(GridCurve, InterpolatesLinearlyAndIsExactAtKnots) {
    const TimeGrid g(1.0, 2);
    const GridCurve c(g, {1.0, 3.0, 2.0});
    EXPECT_EQ(c.at(0.5), 3.0);
    EXPECT_EQ(c.at(1.0), 2.0);
    EXPECT_DOUBLE_EQ(c.at(0.25), 2.0);
    EXPECT_DOUBLE_EQ(c.at(0.75), 2.5);
}

TEST(GridCurve, RejectsWrongLength) { EXPECT_THROW(GridCurve(TimeGrid(1.0, 2), {1.0, 2.0}), StructuralError); }
