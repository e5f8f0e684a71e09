#include "mfg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/error.hpp"

namespace mfg {

namespace {

constexpr double kExponentCap = 700.0;

std::vector<TypeSnapshot> snapshots(const Population& pop, double t) {
    std::vector<TypeSnapshot> out;
    out.reserve(pop.size());
    for (const auto& type : pop.types) out.push_back(snapshot(type, t));
    return out;
}

std::vector<TypeSnapshot> snapshots_at_knot(const Population& pop, std::size_t knot) {
    std::vector<TypeSnapshot> out;
    out.reserve(pop.size());
    for (const auto& type : pop.types) out.push_back(snapshot_at_knot(type, knot));
    return out;
}

// E[(sigma0 h + sigma0 sigma z + sigma0^2 z0) / den] / (1 + psi): the population
// term that shifts every type's optimal investment.
double shifted_mean(const Population& pop, const std::vector<TypeSnapshot>& s, double psi, double z, double z0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto& a = s[j];
        acc += pop.types[j].weight * a.sigma0 * (a.h + a.sigma * z + a.sigma0 * z0) / a.scaled_variance();
    }
    return acc / (1.0 + psi);
}

double investment_q(const TypeSnapshot& a, double m, double z, double z0) {
    return (a.h + a.sigma * z + a.sigma0 * z0 - a.theta_gamma() * a.sigma0 * m) / a.scaled_variance();
}

double j_from_snapshots(const Population& pop, const std::vector<TypeSnapshot>& s, std::size_t k, double z,
                        double z0) {
    double psi = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto& a = s[j];
        psi += pop.types[j].weight * a.theta_gamma() * a.sigma0 * a.sigma0 / a.scaled_variance();
    }
    if (std::abs(1.0 + psi) < 1e-12) throw SingularAggregateError("1 + psi vanishes");
    const double m = shifted_mean(pop, s, psi, z, z0);

    double return_term = 0.0, cross_term = 0.0, square_term = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto& a = s[j];
        const double w = pop.types[j].weight;
        const double den = a.scaled_variance();
        const double q = investment_q(a, m, z, z0);
        return_term += w * (a.h * a.h + a.sigma * a.h * z + a.sigma0 * a.h * z0) / den;
        cross_term += w * a.theta_gamma() * a.sigma0 * a.h / den;
        square_term += w * 0.5 * a.variance() * q * q;
    }
    const auto& b = s[k];
    const double tg = b.theta_gamma();
    const double qk = investment_q(b, m, z, z0);
    const double shifted_z0 = z0 - tg * m;
    return -tg * return_term + tg * cross_term * m + tg * square_term + 0.5 * z * z + 0.5 * shifted_z0 * shifted_z0 +
           0.5 * b.gamma * (1.0 - b.gamma) * b.variance() * qk * qk;
}

std::vector<double> exp_terms(const Population& pop, std::span<const double> y_tilde) {
    if (y_tilde.size() != pop.size()) throw StructuralError("y_tilde must hold one value per type");
    double kappa = 0.0, mean_log_alpha = 0.0, mean_y = 0.0;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const auto& a = pop.types[j];
        if (!std::isfinite(y_tilde[j])) throw StructuralError("y_tilde must be finite");
        const double w = a.weight, one_g = 1.0 - a.gamma;
        kappa += w * a.theta * a.gamma / one_g;
        mean_log_alpha += w * std::log(a.alpha) / one_g;
        mean_y += w * y_tilde[j] / one_g;
    }
    if (std::abs(1.0 + kappa) < 1e-12) throw SingularAggregateError("1 + E[theta gamma / (1 - gamma)] vanishes");
    std::vector<double> out(pop.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const auto& a = pop.types[j];
        const double one_g = 1.0 - a.gamma;
        const double expo = std::log(a.alpha) / one_g - y_tilde[j] / one_g +
                            a.theta * a.gamma * (mean_y - mean_log_alpha) / (one_g * (1.0 + kappa));
        if (std::abs(expo) > kExponentCap) throw RangeError("driver exponent out of range for type " + std::to_string(j));
        out[j] = std::exp(expo);
    }
    return out;
}

double driver_from(const Population& pop, std::size_t k, double j_value, std::span<const double> y_tilde) {
    const auto e = exp_terms(pop, y_tilde);
    const auto& a = pop.types[k];
    return j_value + (1.0 - a.gamma) * e[k] + a.theta * a.gamma * weighted_sum(pop, e);
}

void check_type(const Population& pop, std::size_t k) {
    if (k >= pop.size()) throw DomainError("type index " + std::to_string(k) + " out of range");
}

void check_time(const Population& pop, double t) {
    if (!(t >= 0.0 && t <= pop.horizon())) throw DomainError("t outside [0, T]");
}

}  // namespace

double eval_J(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde) {
    check_type(pop, k);
    check_time(pop, t);
    return j_from_snapshots(pop, snapshots(pop, t), k, z_tilde, z0_tilde);
}

std::vector<double> consumption_from_tilde_y(const Population& pop, std::span<const double> y_tilde) {
    return exp_terms(pop, y_tilde);
}

double bsde_driver(const DriverInput& input) {
    if (input.pop == nullptr) throw StructuralError("driver input has no population");
    const Population& pop = *input.pop;
    const double j = eval_J(pop, input.type, input.t, input.z_tilde, input.z0_tilde);
    return driver_from(pop, input.type, j, input.y_tilde);
}

ResidualReport bsde_residual(const Population& pop, const EquilibriumSolution& sol) {
    if (sol.types() != pop.size()) throw StructuralError("solution does not match the population");
    const TimeGrid& grid = sol.grid;
    const std::size_t n = grid.knots();
    const double dt = grid.dt();
    ResidualReport report;
    report.n_steps = grid.steps();
    report.residual.assign(pop.size(), GridCurve::filled(grid, 0.0));

    std::vector<double> y(pop.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = snapshots_at_knot(pop, i);
        for (std::size_t k = 0; k < pop.size(); ++k) y[k] = sol.y_tilde[k][i];
        for (std::size_t k = 0; k < pop.size(); ++k) {
            const auto& yk = sol.y_tilde[k];
            double dy;
            if (i == 0) {
                dy = (yk[1] - yk[0]) / dt;
            } else if (i + 1 == n) {
                dy = (yk[i] - yk[i - 1]) / dt;
            } else {
                dy = (yk[i + 1] - yk[i - 1]) / (2.0 * dt);
            }
            const double r = dy + driver_from(pop, k, j_from_snapshots(pop, s, k, 0.0, 0.0), y);
            report.residual[k][i] = r;
            if (i > 0 && i + 1 < n) report.sup_norm = std::max(report.sup_norm, std::abs(r));
        }
    }
    return report;
}

double mop_drift(const MopState& st, double pi, double c) {
    if (!(c > 0.0)) throw DomainError("mop_drift: c must be > 0");
    const double s = st.sigma * st.sigma + st.sigma0 * st.sigma0;
    if (!(s > 0.0)) throw DomainError("mop_drift: sigma^2 + sigma0^2 must be > 0");
    const double g = st.gamma, one_g = 1.0 - g;
    const double p = (st.h + st.sigma * st.z + st.sigma0 * st.z0) / (one_g * s);
    const double gap = pi - p;
    const double log_k = std::log(st.alpha) - st.y - st.theta * g * st.nu_hat;
    const double c_opt = std::exp(log_k / one_g);
    const double utility = std::exp(log_k + g * std::log(c)) / g;
    return -0.5 * one_g * s * gap * gap + (-c + utility - one_g / g * c_opt);
}

std::pair<double, double> mop_maximizer(const MopState& st) {
    const double s = st.sigma * st.sigma + st.sigma0 * st.sigma0;
    if (!(s > 0.0)) throw DomainError("mop_maximizer: sigma^2 + sigma0^2 must be > 0");
    const double one_g = 1.0 - st.gamma;
    const double log_k = std::log(st.alpha) - st.y - st.theta * st.gamma * st.nu_hat;
    return {(st.h + st.sigma * st.z + st.sigma0 * st.z0) / (one_g * s), std::exp(log_k / one_g)};
}

MopCheck mop_random_check(std::size_t n, const CounterRng& rng, GammaRegime regime) {
    if (n == 0) throw DomainError("mop_random_check: n must be positive");
    MopCheck out;
    out.n_draws = n;
    out.max_drift = -HUGE_VAL;
    auto lerp = [](double u, double lo, double hi) { return lo + (hi - lo) * u; };
    const double log_cmin = std::log(1e-3), log_cmax = std::log(10.0);
    for (std::size_t i = 0; i < n; ++i) {
        MopState st;
        std::pair<double, double> opt;
        for (std::uint64_t attempt = 0;; ++attempt) {
            const std::uint64_t step = attempt * 8;
            const auto [u0, u1] = rng.uniforms(Stream::drift_check, i, step);
            const auto [u2, u3] = rng.uniforms(Stream::drift_check, i, step + 1);
            const auto [u4, u5] = rng.uniforms(Stream::drift_check, i, step + 2);
            const auto [u6, u7] = rng.uniforms(Stream::drift_check, i, step + 3);
            const auto [u8, u9] = rng.uniforms(Stream::drift_check, i, step + 4);
            st.gamma = regime == GammaRegime::positive ? lerp(u0, 0.05, 0.9) : lerp(u0, -4.0, -0.05);
            st.theta = u1;
            st.alpha = lerp(u2, 0.2, 2.0);
            st.h = lerp(u3, -0.2, 0.3);
            st.sigma = lerp(u4, 0.05, 0.5);
            st.sigma0 = lerp(u5, 0.0, 0.5);
            st.y = lerp(u6, -1.0, 1.0);
            st.nu_hat = lerp(u7, -1.0, 1.0);
            st.z = lerp(u8, -1.0, 1.0);
            st.z0 = lerp(u9, -1.0, 1.0);
            opt = mop_maximizer(st);
            if (opt.second >= 1e-3 && opt.second <= 10.0) break;
        }
        const auto [u_pi, u_c] = rng.uniforms(Stream::drift_check, i, 0xFFFFFFFFu);
        const double pi = lerp(u_pi, -10.0, 10.0);
        const double c = std::exp(lerp(u_c, log_cmin, log_cmax));
        out.max_drift = std::max(out.max_drift, mop_drift(st, pi, c));
        out.max_abs_at_optimum = std::max(out.max_abs_at_optimum, std::abs(mop_drift(st, opt.first, opt.second)));
    }
    return out;
}

double value_function(const Population& pop, std::size_t k, const EquilibriumSolution& sol) {
    check_type(pop, k);
    if (sol.types() != pop.size()) throw StructuralError("solution does not match the population");
    double mean_log_x = 0.0;
    for (const auto& type : pop.types) mean_log_x += type.weight * std::log(type.x0);
    const auto& a = pop.types[k];
    const double y0 = sol.y_tilde[k][0] - a.theta * a.gamma * mean_log_x;
    return std::exp(a.gamma * std::log(a.x0) + y0) / a.gamma;
}

double investment_from_tilde_z(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde) {
    check_type(pop, k);
    check_time(pop, t);
    const auto s = snapshots(pop, t);
    const Aggregates agg = aggregates_at(pop, t);
    return investment_q(s[k], shifted_mean(pop, s, agg.psi, z_tilde, z0_tilde), z_tilde, z0_tilde);
}

double z0_from_tilde_z(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde) {
    check_type(pop, k);
    check_time(pop, t);
    const auto s = snapshots(pop, t);
    const Aggregates agg = aggregates_at(pop, t);
    return z0_tilde - s[k].theta_gamma() * shifted_mean(pop, s, agg.psi, z_tilde, z0_tilde);
}

RelationReport relation_check(const Population& pop, const EquilibriumSolution& sol, const MeanFieldFlow& flow) {
    if (sol.types() != pop.size()) throw StructuralError("solution does not match the population");
    if (flow.mu_hat.size() != sol.grid.knots()) throw StructuralError("flow does not match the grid");
    RelationReport report;
    double kappa = 0.0, mean_log_alpha = 0.0;
    for (const auto& a : pop.types) {
        kappa += a.weight * a.theta * a.gamma / (1.0 - a.gamma);
        mean_log_alpha += a.weight * std::log(a.alpha) / (1.0 - a.gamma);
    }
    for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
        const auto s = snapshots_at_knot(pop, i);
        const double psi = sol.psi[i];
        const double m = shifted_mean(pop, s, psi, 0.0, 0.0);
        double mean_y = 0.0;
        for (std::size_t k = 0; k < pop.size(); ++k) {
            const double pi = investment_q(s[k], m, 0.0, 0.0);
            const double z0 = -s[k].theta_gamma() * m;
            report.investment_gap = std::max(report.investment_gap, std::abs(pi - sol.pi_star[k][i]));
            report.z0_gap = std::max(report.z0_gap, std::abs(z0 - sol.z0[k][i]));
            mean_y += pop.types[k].weight * sol.y_tilde[k][i] / (1.0 - s[k].gamma);
        }
        const double nu = flow.mu_hat[i] + (mean_log_alpha - mean_y) / (1.0 + kappa);
        report.nu_hat_gap = std::max(report.nu_hat_gap, std::abs(nu - flow.nu_hat[i]));
    }
    return report;
}

}  // namespace mfg
