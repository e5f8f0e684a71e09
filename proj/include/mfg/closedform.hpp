#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/population.hpp"

namespace mfg {

/// A type's parameters frozen at one instant.
struct TypeSnapshot {
    double gamma = 0.5;
    double theta = 0.0;
    double alpha = 1.0;
    double h = 0.0;
    double sigma = 0.0;
    double sigma0 = 0.0;

    /// Total variance sigma^2 + sigma0^2.
    double variance() const noexcept { return sigma * sigma + sigma0 * sigma0; }
    /// (1 - gamma)(sigma^2 + sigma0^2), the denominator shared by every closed-form term.
    double scaled_variance() const noexcept { return (1.0 - gamma) * variance(); }
    double theta_gamma() const noexcept { return theta * gamma; }
};

TypeSnapshot snapshot(const AgentType& type, double t);
TypeSnapshot snapshot_at_knot(const AgentType& type, std::size_t knot);

/// Population aggregates entering the closed form at one instant.
///
///   phi   = E[h sigma0 / ((1-gamma) S)]
///   psi   = E[theta gamma sigma0^2 / ((1-gamma) S)]
///   kappa = E[theta gamma / (1-gamma)]
///   mean_log_alpha = E[log alpha / (1-gamma)]
///
/// excess_return and squared_return are the two population expectations inside
/// A; scaled_a is E[A / (1-gamma)].
struct Aggregates {
    double phi = 0.0;
    double psi = 0.0;
    double excess_return = 0.0;
    double squared_return = 0.0;
    double scaled_a = 0.0;
    double kappa = 0.0;
    double mean_log_alpha = 0.0;
};

/// Throws SingularAggregateError when |1 + psi| or |1 + kappa| falls below 1e-12.
Aggregates aggregates_at(const Population& pop, double t);
Aggregates aggregates_at_knot(const Population& pop, std::size_t knot);

// Type-level formulas. They take the population only through Aggregates, so a
// single player's parameter can be perturbed with the population held fixed.

double investment_rate(const TypeSnapshot& a, double phi, double psi);
double coefficient_a(const TypeSnapshot& a, const Aggregates& agg);
double coefficient_b(const TypeSnapshot& a, double coeff_a, const Aggregates& agg);
double coefficient_d(const TypeSnapshot& a, const Aggregates& agg);
/// Z0 = -theta gamma phi / (1 + psi): the common-noise component at Z~ = Z~0 = 0.
double common_noise_loading(const TypeSnapshot& a, double phi, double psi);
/// Closed-form d pi* / d sigma0 with phi, psi held fixed.
double investment_sigma0_slope(const TypeSnapshot& a, double phi, double psi);

/// c*, and log of the bracket G_t = exp(int_t^T B) + D int_t^T exp(int_t^s B) ds,
/// for one type given its B curve and D.
struct ConsumptionPath {
    GridCurve c;
    GridCurve log_g;
};

/// One backward trapezoid pass for int_s^T B and one for the nested integral.
/// Throws RangeError when |int_t^T B| exceeds 700.
ConsumptionPath consumption_path(const GridCurve& b, double d);

/// The unique equilibrium on the population's grid. Per-type curves are indexed
/// by type; Z~ = Z~0 = 0 identically.
struct EquilibriumSolution {
    TimeGrid grid;
    std::vector<GridCurve> pi_star;
    std::vector<GridCurve> c_star;
    std::vector<GridCurve> y_tilde;
    std::vector<GridCurve> a_coeff;
    std::vector<GridCurve> b_coeff;
    std::vector<double> d_coeff;
    /// Common-noise component Z0 per type (it carries the type's theta gamma).
    std::vector<GridCurve> z0;
    GridCurve phi;
    GridCurve psi;
    bool z_tilde_zero = true;
    bool z0_tilde_zero = true;

    std::size_t types() const noexcept { return pi_star.size(); }
};

/// Validates the population, then evaluates every closed-form curve.
EquilibriumSolution solve_equilibrium(const Population& pop);

// Pointwise operations. Time arguments must lie in [0, T]; operations that
// involve integrals of B evaluate on the grid and interpolate between knots.

std::pair<double, double> phi_psi(const Population& pop, double t);
double coeff_A(const Population& pop, std::size_t k, double t);
double coeff_B(const Population& pop, std::size_t k, double t);
double coeff_D(const Population& pop, std::size_t k);
double optimal_investment(const Population& pop, std::size_t k, double t);
double optimal_consumption(const Population& pop, std::size_t k, double t);
double tilde_Y(const Population& pop, std::size_t k, double t);
double common_noise_Z0(const Population& pop, std::size_t k, double t);

/// Constant-coefficient consumption rate. The B = 0 branch is taken for |B| < 1e-12.
double constant_consumption(double b, double d, double horizon, double t);

struct LogUtilityEquilibrium {
    double pi = 0.0;
    double c = 0.0;
};

/// Decoupled equilibrium under log utility; independent of theta and the population.
LogUtilityEquilibrium log_utility_ne(double alpha, double h, double sigma, double sigma0, double t, double horizon);

/// Backward RK4 on Ybreve' = B Ybreve + Ybreve^2, Ybreve_T = D. The coefficient
/// is evaluated from the parameter curves at the RK4 stage times.
GridCurve solve_riccati_numeric(const Population& pop, std::size_t k);

struct Thresholds {
    double sigma0_upper = 0.0;
    double sigma0_lower = 0.0;
    bool valid = false;
    /// max |q(root)| over both roots of the monic stationarity quadratic.
    double residual = 0.0;

    double crossover() const noexcept { return sigma0_upper > sigma0_lower ? sigma0_upper : sigma0_lower; }
};

/// Roots of d pi*/d sigma0 = 0 in sigma0 with the aggregates held fixed. Valid
/// only when theta gamma phi != 0 and h > 0, sigma >= 0, sigma0 >= 0.
Thresholds sigma0_thresholds(const TypeSnapshot& a, double phi, double psi);
Thresholds sigma0_thresholds(const Population& pop, std::size_t k, double t);

}  // namespace mfg
