#include "mfg/population.hpp"

#include <cmath>
#include <sstream>

namespace mfg {

double ParamCurve::operator()(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw DomainError("param curve: t=" + std::to_string(t) + " outside [0, T]");
    }
    if (values_.empty()) throw StructuralError("param curve: no values");
    if (values_.size() == 1) return values_.front();
    const std::size_t n = values_.size() - 1;
    const double x = t / horizon_ * static_cast<double>(n);
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i >= n) return values_.back();
    const double frac = x - static_cast<double>(i);
    if (frac == 0.0) return values_[i];
    return values_[i] + frac * (values_[i + 1] - values_[i]);
}

std::string ValidationReport::describe() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << (v.type < 0 ? std::string("population") : "type " + std::to_string(v.type)) << ": " << v.rule
           << " (value " << v.value << ")\n";
    }
    return os.str();
}

namespace {

void check_curve(const ParamCurve& c, const Population& pop, std::size_t k, const char* name) {
    if (c.values().size() != pop.grid.knots()) {
        throw StructuralError("type " + std::to_string(k) + ": curve '" + name + "' has " +
                              std::to_string(c.values().size()) + " values, grid has " +
                              std::to_string(pop.grid.knots()) + " knots");
    }
    if (c.horizon() != pop.horizon()) {
        throw StructuralError("type " + std::to_string(k) + ": curve '" + name + "' horizon mismatch");
    }
    for (double v : c.values()) {
        if (!std::isfinite(v)) {
            throw StructuralError("type " + std::to_string(k) + ": curve '" + name + "' has a non-finite value");
        }
    }
}

}  // namespace

ValidationReport validate(const Population& pop) {
    if (pop.types.empty()) throw StructuralError("population has no types");
    if (!(pop.gamma_lb > 0.0) || !(pop.sigma_lb > 0.0) || !std::isfinite(pop.gamma_lb) ||
        !std::isfinite(pop.sigma_lb)) {
        throw StructuralError("population bounds gamma_lb and sigma_lb must be finite and > 0");
    }
    for (std::size_t k = 0; k < pop.types.size(); ++k) {
        const auto& a = pop.types[k];
        for (double v : {a.weight, a.x0, a.gamma, a.theta, a.alpha}) {
            if (!std::isfinite(v)) throw StructuralError("type " + std::to_string(k) + ": non-finite scalar");
        }
        check_curve(a.h, pop, k, "h");
        check_curve(a.sigma, pop, k, "sigma");
        check_curve(a.sigma0, pop, k, "sigma0");
    }

    ValidationReport report;
    auto flag = [&](int k, const char* rule, double v) { report.violations.push_back({k, rule, v}); };

    double total = 0.0;
    for (std::size_t k = 0; k < pop.types.size(); ++k) {
        const auto& a = pop.types[k];
        const int ik = static_cast<int>(k);
        total += a.weight;
        if (!(a.weight > 0.0 && a.weight <= 1.0)) flag(ik, "weight_range", a.weight);
        if (!(a.x0 > 0.0)) flag(ik, "x0_positive", a.x0);
        if (a.gamma == 0.0) {
            flag(ik, "gamma_nonzero", a.gamma);
        } else if (!(a.gamma < 1.0)) {
            flag(ik, "gamma_below_one", a.gamma);
        } else if (std::abs(a.gamma) < pop.gamma_lb) {
            flag(ik, "gamma_lb", a.gamma);
        }
        if (!(a.theta >= 0.0 && a.theta <= 1.0)) flag(ik, "theta_range", a.theta);
        if (!(a.alpha > 0.0)) flag(ik, "alpha_positive", a.alpha);

        const auto s = a.sigma.values();
        const auto s0 = a.sigma0.values();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < 0.0) {
                flag(ik, "sigma_nonnegative", s[i]);
                break;
            }
        }
        for (std::size_t i = 0; i < s0.size(); ++i) {
            if (s0[i] < 0.0) {
                flag(ik, "sigma0_nonnegative", s0[i]);
                break;
            }
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (std::abs(s[i]) + std::abs(s0[i]) < pop.sigma_lb) {
                flag(ik, "sigma_lb", std::abs(s[i]) + std::abs(s0[i]));
                break;
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-12) flag(-1, "weights_sum", total);
    return report;
}

void require_valid(const Population& pop) {
    const auto report = validate(pop);
    if (!report.ok()) throw DomainError("population violates standing assumptions:\n" + report.describe());
}

double weighted_sum(const Population& pop, std::span<const double> per_type) {
    double acc = 0.0;
    for (std::size_t k = 0; k < pop.types.size(); ++k) acc += pop.types[k].weight * per_type[k];
    return acc;
}

std::vector<double> cumulative_weights(const Population& pop) {
    std::vector<double> cum(pop.types.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < pop.types.size(); ++k) {
        acc += pop.types[k].weight;
        cum[k] = acc;
    }
    return cum;
}

std::size_t draw_type(std::span<const double> cum, double u) {
    // Scale by the total so that rounding in the weights cannot leave a gap at the top.
    const double target = u * cum.back();
    for (std::size_t k = 0; k < cum.size(); ++k) {
        if (target < cum[k]) return k;
    }
    // u*total == total only through rounding; take the last type with mass.
    for (std::size_t k = cum.size(); k-- > 0;) {
        if (k == 0 || cum[k] > cum[k - 1]) return k;
    }
    return 0;
}

std::vector<std::size_t> sample_agents(const Population& pop, std::size_t n, const CounterRng& rng) {
    if (n == 0) throw DomainError("sample_agents: n must be >= 1");
    if (pop.types.empty()) throw StructuralError("sample_agents: empty population");
    const auto cum = cumulative_weights(pop);
    if (!(cum.back() > 0.0)) throw StructuralError("sample_agents: total weight is zero");
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = draw_type(cum, rng.uniform(Stream::type_draw, i, 0));
    return out;
}

}  // namespace mfg
