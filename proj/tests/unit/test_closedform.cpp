#include <gtest/gtest.h>

#include <cmath>

#include "mfg/closedform.hpp"
#include "mfg/error.hpp"
#include "test_support.hpp"

using namespace mfg;
using mfg::testing::make_population;
using mfg::testing::make_type;
using mfg::testing::reference_population;
using mfg::testing::rel_err;
using mfg::testing::single_type;

namespace {

// Frozen from tests/oracles/closed_form_oracle.py (50-digit mpmath).
struct RefType {
    double a, b, d, pi, c0, c_half, y0;
};
constexpr RefType kRef[2] = {
    {-0.028898253782086615544, 0.042380342623358695693, 1.3341019851589813102, 1.7107121836374338647,
     0.55447423744117372132, 0.78680930159066339448, 0.63854174461272018295},
    {-0.0023547576327660120748, 0.013510310769034635038, 0.95078815551815087983, 0.50702619187757502563,
     0.48242741430392061814, 0.64078721687247221904, 0.71837735470120947238},
};

}  // namespace

TEST(PhiPsi, NoCommonNoise) {
    const auto pop = single_type(10, 0.5, 0.7, 0.1, 0.2, 0.0);
    const auto [phi, psi] = phi_psi(pop, 0.3);
    EXPECT_EQ(phi, 0.0);
    EXPECT_EQ(psi, 0.0);
}

TEST(PhiPsi, SingleType) {
    const auto pop = single_type(10, 0.5, 1.0, 0.1, 0.0, 0.2);
    const auto [phi, psi] = phi_psi(pop, 0.0);
    EXPECT_NEAR(phi, 1.0, 1e-15);
    EXPECT_NEAR(psi, 1.0, 1e-15);
}

TEST(PhiPsi, TwoTypes) {
    const TimeGrid g(1.0, 10);
    const auto pop = make_population(g, {make_type("a", 0.5, 1.0, 0.5, 1.0, 1.0, 0.1, 0.0, 0.2, g),
                                         make_type("b", 0.5, 1.0, 0.5, 0.5, 1.0, 0.2, 0.2, 0.2, g)});
    const auto [phi, psi] = phi_psi(pop, 1.0);
    EXPECT_NEAR(phi, 1.0, 1e-15);
    EXPECT_NEAR(psi, 0.625, 1e-15);
}

TEST(PhiPsi, SingularAggregateIsReported) {
    // theta = 2 is outside the standing assumptions; it is the only way to make 1 + psi vanish.
    const auto pop = single_type(10, -1.0, 2.0, 0.1, 0.0, 0.2);
    EXPECT_THROW(phi_psi(pop, 0.0), SingularAggregateError);
}

TEST(CoeffA, MertonCase) { EXPECT_NEAR(coeff_A(single_type(10, 0.5, 0.0, 0.1, 0.2, 0.0), 0, 0.0), -0.125, 1e-15); }

TEST(CoeffA, ZeroReturn) { EXPECT_EQ(coeff_A(single_type(10, 0.5, 0.0, 0.0, 0.2, 0.1), 0, 0.0), 0.0); }

TEST(CoeffA, SingleTypeWithCompetition) {
    EXPECT_NEAR(coeff_A(single_type(10, 0.5, 1.0, 0.1, 0.0, 0.2), 0, 0.0), 0.0, 1e-15);
}

TEST(CoeffB, MertonCase) { EXPECT_NEAR(coeff_B(single_type(10, 0.5, 0.0, 0.1, 0.2, 0.0), 0, 0.0), 0.25, 1e-15); }

TEST(CoeffD, UnitAlpha) {
    const auto pop = reference_population(10);
    Population unit = pop;
    for (auto& a : unit.types) a.alpha = 1.0;
    EXPECT_EQ(coeff_D(unit, 0), 1.0);
    EXPECT_EQ(coeff_D(unit, 1), 1.0);
}

TEST(CoeffD, ExponentialAlpha) {
    EXPECT_NEAR(coeff_D(single_type(10, 0.5, 0.0, 0.1, 0.2, 0.0, std::exp(0.5)), 0), std::exp(1.0), 1e-14);
}

TEST(Coefficients, ReferencePopulationMatchesOracle) {
    const auto pop = reference_population(2000);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LT(rel_err(coeff_A(pop, k, 0.3), kRef[k].a), 1e-13) << k;
        EXPECT_LT(rel_err(coeff_B(pop, k, 0.3), kRef[k].b), 1e-13) << k;
        EXPECT_LT(rel_err(coeff_D(pop, k), kRef[k].d), 1e-14) << k;
        EXPECT_LT(rel_err(optimal_investment(pop, k, 0.3), kRef[k].pi), 1e-14) << k;
    }
}

TEST(Equilibrium, ReferencePopulationMatchesOracle) {
    const auto pop = reference_population(2000);
    const auto sol = solve_equilibrium(pop);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LT(rel_err(sol.c_star[k][0], kRef[k].c0), 1e-8) << k;
        EXPECT_LT(rel_err(sol.c_star[k].at(0.5), kRef[k].c_half), 1e-8) << k;
        EXPECT_LT(rel_err(sol.y_tilde[k][0], kRef[k].y0), 1e-8) << k;
        EXPECT_LT(rel_err(optimal_consumption(pop, k, 0.5), kRef[k].c_half), 1e-8) << k;
        EXPECT_LT(rel_err(tilde_Y(pop, k, 0.0), kRef[k].y0), 1e-8) << k;
    }
}

TEST(OptimalInvestment, Examples) {
    EXPECT_NEAR(optimal_investment(single_type(10, 0.5, 0.0, 0.1, 0.2, 0.0), 0, 0.0), 5.0, 1e-14);
    EXPECT_NEAR(optimal_investment(single_type(10, 0.5, 1.0, 0.1, 0.0, 0.2), 0, 0.0), 2.5, 1e-14);
    const auto pop = mfg::testing::random_population(5, 4, 20);
    Population no_common = pop;
    for (auto& a : no_common.types) a.sigma0 = ParamCurve::constant(pop.grid, 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& a = no_common.types[k];
        const double s = a.sigma(0.4);
        EXPECT_EQ(optimal_investment(no_common, k, 0.4), a.h(0.4) / ((1.0 - a.gamma) * (s * s)));
    }
}

TEST(OptimalConsumption, TerminalValueIsD) {
    const auto pop = reference_population(100);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(optimal_consumption(pop, k, 1.0), coeff_D(pop, k));
}

TEST(OptimalConsumption, MertonMatchesConstantFormula) {
    const auto pop = single_type(2000, 0.5, 0.0, 0.1, 0.2, 0.0);
    EXPECT_LT(rel_err(optimal_consumption(pop, 0, 0.0), 0.41320144171070600817), 1e-8);
}

TEST(OptimalConsumption, ZeroBBranch) {
    // A = 0 exactly for this type, so B = 0 and D = 1.
    const auto pop = single_type(1000, 0.5, 1.0, 0.1, 0.0, 0.2);
    EXPECT_NEAR(optimal_consumption(pop, 0, 0.0), 0.5, 1e-12);
}

TEST(OptimalConsumption, TimeOutsideHorizon) {
    EXPECT_THROW(optimal_consumption(reference_population(10), 0, 1.5), DomainError);
}

TEST(ConsumptionPath, OverflowIsARangeError) {
    const TimeGrid g(1.0, 10);
    EXPECT_THROW(consumption_path(GridCurve::filled(g, 1000.0), 1.0), RangeError);
}

TEST(TildeY, TerminalValueIsZero) {
    const auto pop = mfg::testing::random_population(17, 3, 200);
    const auto sol = solve_equilibrium(pop);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(sol.y_tilde[k].back(), 0.0, 1e-10);
        EXPECT_EQ(sol.c_star[k].back(), sol.d_coeff[k]);
    }
}

TEST(TildeY, MertonReduction) {
    const auto pop = single_type(2000, 0.5, 0.0, 0.1, 0.2, 0.0);
    EXPECT_LT(rel_err(tilde_Y(pop, 0, 0.0), 0.44191002630372023624), 1e-8);
    EXPECT_LT(rel_err(tilde_Y(pop, 0, 0.25), 0.35430137455209076064), 1e-8);
    EXPECT_LT(rel_err(tilde_Y(pop, 0, 0.5), 0.25513541454818183207), 1e-8);
}

TEST(CommonNoiseZ0, Examples) {
    EXPECT_EQ(common_noise_Z0(single_type(10, 0.5, 0.7, 0.1, 0.2, 0.0), 0, 0.0), 0.0);
    EXPECT_EQ(common_noise_Z0(single_type(10, 0.5, 0.0, 0.1, 0.2, 0.3), 0, 0.0), 0.0);
    EXPECT_NEAR(common_noise_Z0(single_type(10, 0.5, 1.0, 0.1, 0.0, 0.2), 0, 0.0), -0.25, 1e-15);
}

TEST(ConstantConsumption, Branches) {
    EXPECT_EQ(constant_consumption(0.0, 1.0, 1.0, 0.0), 0.5);
    EXPECT_NEAR(constant_consumption(0.25, 1.0, 1.0, 0.0), 0.41320144171070600817, 1e-15);
    EXPECT_EQ(constant_consumption(0.7, 2.5, 1.0, 1.0), 2.5);
    EXPECT_EQ(constant_consumption(-0.3, 0.4, 3.0, 3.0), 0.4);
    EXPECT_LT(rel_err(constant_consumption(1e-9, 1.0, 1.0, 0.0), 0.5), 1e-6);
    EXPECT_NEAR(constant_consumption(1e-9, 1.0, 1.0, 0.0), 0.49999999962500000011, 1e-15);
    EXPECT_THROW(constant_consumption(0.1, 0.0, 1.0, 0.0), DomainError);
}

TEST(LogUtility, Examples) {
    const auto a = log_utility_ne(1.0, 0.1, 0.2, 0.0, 0.0, 1.0);
    EXPECT_NEAR(a.pi, 2.5, 1e-15);
    EXPECT_EQ(a.c, 0.5);
    EXPECT_EQ(log_utility_ne(1.7, 0.1, 0.2, 0.1, 2.0, 2.0).c, 1.7);
    EXPECT_THROW(log_utility_ne(1.0, 0.1, 0.0, 0.0, 0.0, 1.0), DomainError);
}

TEST(Riccati, AgreesWithClosedFormOnRandomPopulations) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto pop = mfg::testing::random_population(100 + seed, 2 + seed % 3, 2000);
        const auto sol = solve_equilibrium(pop);
        for (std::size_t k = 0; k < pop.size(); ++k) {
            const auto rk = solve_riccati_numeric(pop, k);
            for (std::size_t i = 0; i < rk.size(); ++i) ASSERT_LT(rel_err(rk[i], sol.c_star[k][i]), 1e-6);
        }
    }
}

TEST(Riccati, MertonEqualsConstantFormula) {
    const auto pop = single_type(500, -2.0, 0.0, 0.07, 0.3, 0.1, 1.6);
    const auto rk = solve_riccati_numeric(pop, 0);
    const double b = coeff_B(pop, 0, 0.0), d = coeff_D(pop, 0);
    for (std::size_t i = 0; i < rk.size(); ++i) {
        EXPECT_LT(rel_err(rk[i], constant_consumption(b, d, 1.0, pop.grid.time(i))), 1e-10);
    }
}

TEST(ConstantCoefficients, QuadraturePipelineMatchesBothBranches) {
    for (const auto& pop : {reference_population(1000), single_type(1000, 0.5, 1.0, 0.1, 0.0, 0.2),
                            single_type(1000, -1.0, 0.5, 0.06, 0.25, 0.15)}) {
        const auto sol = solve_equilibrium(pop);
        for (std::size_t k = 0; k < pop.size(); ++k) {
            const double b = sol.b_coeff[k][0], d = sol.d_coeff[k];
            for (std::size_t i = 0; i < sol.grid.knots(); i += 50) {
                EXPECT_LT(rel_err(sol.c_star[k][i], constant_consumption(b, d, 1.0, sol.grid.time(i))), 1e-8);
            }
        }
    }
}

TEST(MertonReduction, InvestmentIsExactAtEveryKnot) {
    auto pop = mfg::testing::random_population(77, 4, 100);
    for (auto& a : pop.types) a.theta = 0.0;
    const auto sol = solve_equilibrium(pop);
    for (std::size_t k = 0; k < pop.size(); ++k) {
        const auto& a = pop.types[k];
        for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
            const double s = a.sigma.at_knot(i), s0 = a.sigma0.at_knot(i);
            EXPECT_EQ(sol.pi_star[k][i], a.h.at_knot(i) / ((1.0 - a.gamma) * (s * s + s0 * s0)));
        }
    }
}

TEST(Monotonicity, InvestmentIncreasesInOwnReturn) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto pop = mfg::testing::random_population(500 + seed, 1, 4, false);
        const TypeSnapshot a = snapshot_at_knot(pop.types[0], 0);
        const Aggregates agg = aggregates_at_knot(pop, 0);
        const double eps = 1e-6;
        TypeSnapshot up = a, down = a;
        up.h += eps;
        down.h -= eps;
        const double fd = (investment_rate(up, agg.phi, agg.psi) - investment_rate(down, agg.phi, agg.psi)) / (2 * eps);
        EXPECT_GT(fd, 0.0);
        EXPECT_LT(rel_err(fd, 1.0 / a.scaled_variance()), 1e-6);
    }
}

TEST(Monotonicity, Sigma0SignPattern) {
    const auto pop = single_type(4, 0.8, 1.0, 0.1, 0.2, 0.3);
    const TypeSnapshot base = snapshot_at_knot(pop.types[0], 0);
    const Aggregates agg = aggregates_at_knot(pop, 0);
    const Thresholds th = sigma0_thresholds(base, agg.phi, agg.psi);
    ASSERT_TRUE(th.valid);
    ASSERT_GT(base.theta_gamma() * agg.phi, 0.0);
    const double cross = th.crossover();
    auto fd = [&](double s0) {
        TypeSnapshot up = base, down = base;
        up.sigma0 = s0 + 1e-6;
        down.sigma0 = s0 - 1e-6;
        return (investment_rate(up, agg.phi, agg.psi) - investment_rate(down, agg.phi, agg.psi)) / 2e-6;
    };
    for (double f : {0.05, 0.3, 0.6, 0.95}) EXPECT_LT(fd(f * cross), 0.0) << f;
    for (double f : {1.05, 1.5, 3.0, 10.0}) EXPECT_GT(fd(f * cross), 0.0) << f;
    TypeSnapshot s = base;
    s.sigma0 = 0.5 * cross;
    EXPECT_LT(rel_err(investment_sigma0_slope(s, agg.phi, agg.psi), fd(0.5 * cross)), 1e-6);
}

TEST(Monotonicity, PopulationReturnShiftHasSignOppositeToGamma) {
    for (double gamma : {0.5, -1.5}) {
        const TimeGrid g(1.0, 4);
        auto pop = make_population(g, {make_type("probe", 0.3, 1.0, gamma, 0.6, 1.0, 0.08, 0.2, 0.15, g),
                                       make_type("other", 0.4, 1.0, 0.4, 0.5, 1.0, 0.05, 0.3, 0.2, g),
                                       make_type("third", 0.3, 1.0, -0.7, 0.9, 1.0, 0.1, 0.25, 0.1, g)});
        const double base = optimal_investment(pop, 0, 0.0);
        for (std::size_t k = 1; k < pop.size(); ++k) {
            for (double& v : pop.types[k].h.mutable_values()) v += 1e-4;
        }
        const double shifted = optimal_investment(pop, 0, 0.0);
        EXPECT_EQ(std::signbit(shifted - base), gamma > 0.0) << gamma;
    }
}

TEST(Thresholds, InvalidWithoutCompetition) {
    EXPECT_FALSE(sigma0_thresholds(single_type(4, 0.5, 0.0, 0.1, 0.2, 0.3), 0, 0.0).valid);
}

TEST(Thresholds, ZeroIdiosyncraticVolatility) {
    TypeSnapshot a{0.5, 1.0, 1.0, 0.1, 0.0, 0.2};
    const double phi = 0.7, psi = 0.4;
    const auto th = sigma0_thresholds(a, phi, psi);
    ASSERT_TRUE(th.valid);
    EXPECT_NEAR(th.sigma0_upper, 2.0 * 0.1 * 1.4 / (0.5 * 0.7), 1e-14);
    EXPECT_EQ(th.sigma0_lower, 0.0);
}

TEST(Thresholds, RootsAreSignChangesOfTheSlope) {
    for (double gamma : {0.3, 0.8}) {
        TypeSnapshot a{gamma, 0.9, 1.0, 0.07, 0.3, 0.2};
        const double phi = 0.45, psi = 0.2;
        const auto th = sigma0_thresholds(a, phi, psi);
        ASSERT_TRUE(th.valid);
        EXPECT_LE(th.residual, 1e-9);
        for (double r : {th.sigma0_upper, th.sigma0_lower}) {
            const double d = 1e-4 * std::max(1.0, std::abs(r));
            TypeSnapshot lo = a, hi = a;
            lo.sigma0 = r - d;
            hi.sigma0 = r + d;
            auto fd = [&](TypeSnapshot s) {
                TypeSnapshot up = s, down = s;
                up.sigma0 += 1e-7;
                down.sigma0 -= 1e-7;
                return investment_rate(up, phi, psi) - investment_rate(down, phi, psi);
            };
            EXPECT_LT(fd(lo) * fd(hi), 0.0) << r;
        }
    }
}
