#include "mfg/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/error.hpp"
#include "mfg/odequad.hpp"

namespace mfg {

namespace {

constexpr double kSingularTol = 1e-12;
constexpr double kExponentCap = 700.0;
constexpr double kZeroBranch = 1e-12;

void check_type_index(const Population& pop, std::size_t k) {
    if (k >= pop.size()) throw DomainError("type index " + std::to_string(k) + " out of range");
}

Aggregates aggregate(const Population& pop, const std::vector<TypeSnapshot>& snaps) {
    Aggregates agg;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const auto& a = snaps[k];
        const double w = pop.types[k].weight;
        const double den = a.scaled_variance();
        agg.phi += w * a.h * a.sigma0 / den;
        agg.psi += w * a.theta_gamma() * a.sigma0 * a.sigma0 / den;
        agg.kappa += w * a.theta_gamma() / (1.0 - a.gamma);
        agg.mean_log_alpha += w * std::log(a.alpha) / (1.0 - a.gamma);
    }
    if (std::abs(1.0 + agg.psi) < kSingularTol) throw SingularAggregateError("1 + psi vanishes");
    if (std::abs(1.0 + agg.kappa) < kSingularTol) {
        throw SingularAggregateError("1 + E[theta gamma / (1 - gamma)] vanishes");
    }

    const double m = agg.phi / (1.0 + agg.psi);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const auto& a = snaps[k];
        const double w = pop.types[k].weight;
        const double den = a.scaled_variance();
        const double shifted = a.h - a.theta_gamma() * a.sigma0 * m;
        agg.excess_return += w * (a.h * a.h - a.theta_gamma() * a.sigma0 * a.h * m) / den;
        agg.squared_return += w * shifted * shifted / ((1.0 - a.gamma) * den);
    }
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const auto& a = snaps[k];
        agg.scaled_a += pop.types[k].weight * coefficient_a(a, agg) / (1.0 - a.gamma);
    }
    return agg;
}

}  // namespace

TypeSnapshot snapshot(const AgentType& type, double t) {
    return {type.gamma, type.theta, type.alpha, type.h(t), type.sigma(t), type.sigma0(t)};
}

TypeSnapshot snapshot_at_knot(const AgentType& type, std::size_t knot) {
    return {type.gamma,         type.theta,          type.alpha,
            type.h.at_knot(knot), type.sigma.at_knot(knot), type.sigma0.at_knot(knot)};
}

Aggregates aggregates_at(const Population& pop, double t) {
    std::vector<TypeSnapshot> snaps;
    snaps.reserve(pop.size());
    for (const auto& type : pop.types) snaps.push_back(snapshot(type, t));
    return aggregate(pop, snaps);
}

Aggregates aggregates_at_knot(const Population& pop, std::size_t knot) {
    std::vector<TypeSnapshot> snaps;
    snaps.reserve(pop.size());
    for (const auto& type : pop.types) snaps.push_back(snapshot_at_knot(type, knot));
    return aggregate(pop, snaps);
}

double investment_rate(const TypeSnapshot& a, double phi, double psi) {
    const double den = a.scaled_variance();
    return a.h / den - a.theta_gamma() * a.sigma0 * phi / (den * (1.0 + psi));
}

double coefficient_a(const TypeSnapshot& a, const Aggregates& agg) {
    const double tg = a.theta_gamma();
    const double one_psi = 1.0 + agg.psi;
    const double shifted = a.h - tg * a.sigma0 * agg.phi / one_psi;
    return -a.gamma * shifted * shifted / (2.0 * a.scaled_variance())
           - agg.phi * agg.phi * tg * tg / (2.0 * one_psi * one_psi)
           + tg * agg.excess_return
           - 0.5 * tg * agg.squared_return;
}

double coefficient_b(const TypeSnapshot& a, double coeff_a, const Aggregates& agg) {
    const double one_g = 1.0 - a.gamma;
    return a.theta_gamma() / one_g * agg.scaled_a / (1.0 + agg.kappa) - coeff_a / one_g;
}

double coefficient_d(const TypeSnapshot& a, const Aggregates& agg) {
    const double one_g = 1.0 - a.gamma;
    return std::exp(std::log(a.alpha) / one_g - a.theta_gamma() * agg.mean_log_alpha / (one_g * (1.0 + agg.kappa)));
}

double common_noise_loading(const TypeSnapshot& a, double phi, double psi) {
    return -a.theta_gamma() * phi / (1.0 + psi);
}

double investment_sigma0_slope(const TypeSnapshot& a, double phi, double psi) {
    const double s = a.variance();
    const double den = (1.0 - a.gamma) * s * s;
    return -2.0 * a.h * a.sigma0 / den
           - a.theta_gamma() * (a.sigma * a.sigma - a.sigma0 * a.sigma0) * phi / (den * (1.0 + psi));
}

ConsumptionPath consumption_path(const GridCurve& b, double d) {
    const GridCurve int_b = trapezoid_cumulative(b, Anchor::right);  // t -> int_t^T B
    GridCurve discount = GridCurve::filled(b.grid, 0.0);             // exp(-int_t^T B)
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (std::abs(int_b[i]) > kExponentCap) {
            throw RangeError("consumption: |int_t^T B| exceeds " + std::to_string(kExponentCap) + " at knot " +
                             std::to_string(i));
        }
        discount[i] = std::exp(-int_b[i]);
    }
    const GridCurve nested = trapezoid_cumulative(discount, Anchor::right);

    ConsumptionPath out{GridCurve::filled(b.grid, 0.0), GridCurve::filled(b.grid, 0.0)};
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double dn = d * nested[i];
        out.c[i] = d * discount[i] / (1.0 + dn);
        out.log_g[i] = int_b[i] + std::log1p(dn);
        if (!std::isfinite(out.c[i]) || !(out.c[i] > 0.0)) {
            throw RangeError("consumption: non-finite or non-positive rate at knot " + std::to_string(i));
        }
    }
    return out;
}

EquilibriumSolution solve_equilibrium(const Population& pop) {
    require_valid(pop);
    const TimeGrid& grid = pop.grid;
    const std::size_t n_types = pop.size();
    const std::size_t n_knots = grid.knots();

    EquilibriumSolution sol;
    sol.grid = grid;
    const GridCurve zero = GridCurve::filled(grid, 0.0);
    sol.pi_star.assign(n_types, zero);
    sol.a_coeff.assign(n_types, zero);
    sol.b_coeff.assign(n_types, zero);
    sol.z0.assign(n_types, zero);
    sol.phi = zero;
    sol.psi = zero;

    for (std::size_t i = 0; i < n_knots; ++i) {
        const Aggregates agg = aggregates_at_knot(pop, i);
        sol.phi[i] = agg.phi;
        sol.psi[i] = agg.psi;
        for (std::size_t k = 0; k < n_types; ++k) {
            const TypeSnapshot a = snapshot_at_knot(pop.types[k], i);
            const double coeff = coefficient_a(a, agg);
            sol.pi_star[k][i] = investment_rate(a, agg.phi, agg.psi);
            sol.a_coeff[k][i] = coeff;
            sol.b_coeff[k][i] = coefficient_b(a, coeff, agg);
            sol.z0[k][i] = common_noise_loading(a, agg.phi, agg.psi);
        }
    }

    const Aggregates agg0 = aggregates_at_knot(pop, 0);
    std::vector<ConsumptionPath> paths;
    paths.reserve(n_types);
    sol.d_coeff.resize(n_types);
    for (std::size_t k = 0; k < n_types; ++k) {
        sol.d_coeff[k] = coefficient_d(snapshot_at_knot(pop.types[k], 0), agg0);
        paths.push_back(consumption_path(sol.b_coeff[k], sol.d_coeff[k]));
        sol.c_star.push_back(paths.back().c);
    }

    std::vector<double> log_d(n_types);
    for (std::size_t k = 0; k < n_types; ++k) log_d[k] = std::log(sol.d_coeff[k]);
    const double mean_log_d = weighted_sum(pop, log_d);

    sol.y_tilde.assign(n_types, zero);
    std::vector<double> log_g(n_types);
    for (std::size_t i = 0; i < n_knots; ++i) {
        for (std::size_t k = 0; k < n_types; ++k) log_g[k] = paths[k].log_g[i];
        const double mean_log_g = weighted_sum(pop, log_g);
        for (std::size_t k = 0; k < n_types; ++k) {
            const auto& a = pop.types[k];
            const double tg = a.theta * a.gamma;
            const double one_g = 1.0 - a.gamma;
            sol.y_tilde[k][i] = -tg * mean_log_d - one_g * log_d[k] + tg * mean_log_g + one_g * log_g[k] +
                                std::log(a.alpha);
        }
    }
    return sol;
}

std::pair<double, double> phi_psi(const Population& pop, double t) {
    const Aggregates agg = aggregates_at(pop, t);
    return {agg.phi, agg.psi};
}

double coeff_A(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    return coefficient_a(snapshot(pop.types[k], t), aggregates_at(pop, t));
}

double coeff_B(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    const Aggregates agg = aggregates_at(pop, t);
    const TypeSnapshot a = snapshot(pop.types[k], t);
    return coefficient_b(a, coefficient_a(a, agg), agg);
}

double coeff_D(const Population& pop, std::size_t k) {
    check_type_index(pop, k);
    return coefficient_d(snapshot(pop.types[k], 0.0), aggregates_at(pop, 0.0));
}

double optimal_investment(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    const Aggregates agg = aggregates_at(pop, t);
    return investment_rate(snapshot(pop.types[k], t), agg.phi, agg.psi);
}

double optimal_consumption(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    pop.grid.locate(t);
    return solve_equilibrium(pop).c_star[k].at(t);
}

double tilde_Y(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    pop.grid.locate(t);
    return solve_equilibrium(pop).y_tilde[k].at(t);
}

double common_noise_Z0(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    const Aggregates agg = aggregates_at(pop, t);
    return common_noise_loading(snapshot(pop.types[k], t), agg.phi, agg.psi);
}

double constant_consumption(double b, double d, double horizon, double t) {
    if (!(d > 0.0)) throw DomainError("constant_consumption: D must be > 0");
    if (!(t >= 0.0 && t <= horizon)) throw DomainError("constant_consumption: t outside [0, T]");
    const double tau = horizon - t;
    if (std::abs(b) < kZeroBranch) return 1.0 / (tau + 1.0 / d);
    // -1/B + (1/D + 1/B) e^{B tau} rewritten without the 1/B cancellation.
    return 1.0 / (std::exp(b * tau) / d + std::expm1(b * tau) / b);
}

LogUtilityEquilibrium log_utility_ne(double alpha, double h, double sigma, double sigma0, double t, double horizon) {
    const double s = sigma * sigma + sigma0 * sigma0;
    if (!(s > 0.0)) throw DomainError("log_utility_ne: sigma^2 + sigma0^2 must be > 0");
    if (!(alpha > 0.0)) throw DomainError("log_utility_ne: alpha must be > 0");
    if (!(t >= 0.0 && t <= horizon)) throw DomainError("log_utility_ne: t outside [0, T]");
    return {h / s, alpha / (1.0 + alpha * (horizon - t))};
}

GridCurve solve_riccati_numeric(const Population& pop, std::size_t k) {
    check_type_index(pop, k);
    require_valid(pop);
    const AgentType& type = pop.types[k];
    const double d = coeff_D(pop, k);
    auto rhs = [&](double t, double y) {
        const Aggregates agg = aggregates_at(pop, t);
        const TypeSnapshot a = snapshot(type, t);
        const double b = coefficient_b(a, coefficient_a(a, agg), agg);
        return b * y + y * y;
    };
    return rk4_integrate(pop.grid, rhs, d, Direction::backward);
}

Thresholds sigma0_thresholds(const TypeSnapshot& a, double phi, double psi) {
    Thresholds out;
    const double tg_phi = a.theta_gamma() * phi;
    if (tg_phi == 0.0 || !(a.h > 0.0) || a.sigma < 0.0 || a.sigma0 < 0.0 || !(1.0 + psi > 0.0)) return out;

    const double one_psi = 1.0 + psi;
    const double cross = a.theta_gamma() * a.sigma * phi / one_psi;
    out.sigma0_upper = one_psi * (a.h + std::sqrt(a.h * a.h + cross * cross)) / tg_phi;
    // product of the roots of s^2 - p s - sigma^2 is -sigma^2
    out.sigma0_lower = -a.sigma * a.sigma / out.sigma0_upper;
    out.valid = true;

    const double p = 2.0 * a.h * one_psi / tg_phi;
    for (double r : {out.sigma0_upper, out.sigma0_lower}) {
        const double q = r * r - p * r - a.sigma * a.sigma;
        out.residual = std::max(out.residual, std::abs(q) / std::max(1.0, r * r));
    }
    return out;
}

Thresholds sigma0_thresholds(const Population& pop, std::size_t k, double t) {
    check_type_index(pop, k);
    const Aggregates agg = aggregates_at(pop, t);
    return sigma0_thresholds(snapshot(pop.types[k], t), agg.phi, agg.psi);
}

}  // namespace mfg
