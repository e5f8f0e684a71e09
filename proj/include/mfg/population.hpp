#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfg/error.hpp"
#include "mfg/grid.hpp"
#include "mfg/rng.hpp"

namespace mfg {

/// Deterministic market-parameter curve sampled on the population's uniform
/// grid, piecewise linear in t. Length is checked by validate(), not here, so
/// that ragged input surfaces as a StructuralError from validation.
class ParamCurve {
public:
    ParamCurve() = default;
    ParamCurve(double horizon, std::vector<double> values) : horizon_(horizon), values_(std::move(values)) {}

    static ParamCurve constant(const TimeGrid& grid, double v) {
        return {grid.horizon(), std::vector<double>(grid.knots(), v)};
    }

    /// Linear interpolation between adjacent knots; DomainError outside [0, T].
    double operator()(double t) const;
    double at_knot(std::size_t i) const { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }
    double horizon() const noexcept { return horizon_; }

private:
    double horizon_ = 1.0;
    std::vector<double> values_;
};

/// One heterogeneity class of the population.
struct AgentType {
    std::string name;
    double weight = 1.0;
    double x0 = 1.0;     // initial wealth
    double gamma = 0.5;  // CRRA exponent, in (-inf, 1) \ {0}
    double theta = 0.0;  // competition weight, in [0, 1]
    double alpha = 1.0;  // weight of consumption utility
    ParamCurve h;        // return rate
    ParamCurve sigma;    // idiosyncratic volatility
    ParamCurve sigma0;   // common-noise volatility
};

inline constexpr double kDefaultGammaLb = 1e-3;
inline constexpr double kDefaultSigmaLb = 1e-3;

/// Finite weighted mixture of agent types on a shared grid. The weights play
/// the role of the type distribution; population expectations are exact sums.
struct Population {
    std::vector<AgentType> types;
    TimeGrid grid;
    double gamma_lb = kDefaultGammaLb;
    double sigma_lb = kDefaultSigmaLb;

    std::size_t size() const noexcept { return types.size(); }
    double horizon() const noexcept { return grid.horizon(); }
};

struct Violation {
    int type = -1;  // -1 for population-level rules
    std::string rule;
    double value = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string describe() const;
};

/// Checks the standing assumptions on every type. Structural problems (ragged
/// curves, NaN, empty population, non-positive bounds) throw StructuralError;
/// assumption violations are reported, not thrown.
ValidationReport validate(const Population& pop);

/// Throws StructuralError or a DomainError carrying the report text when the
/// population is not valid.
void require_valid(const Population& pop);

/// Population expectation sum_k w_k f(type_k, t). DomainError for t outside [0, T].
template <class F>
double expect(const Population& pop, F&& f, double t) {
    if (!(t >= 0.0 && t <= pop.horizon())) {
        throw DomainError("expect: t=" + std::to_string(t) + " outside [0, T]");
    }
    double acc = 0.0;
    for (const auto& type : pop.types) acc += type.weight * f(type, t);
    return acc;
}

/// sum_k w_k v_k for per-type values already evaluated.
double weighted_sum(const Population& pop, std::span<const double> per_type);

/// n i.i.d. type indices drawn with probabilities equal to the weights.
/// Draw i depends only on (seed, i).
std::vector<std::size_t> sample_agents(const Population& pop, std::size_t n, const CounterRng& rng);

/// Single-type draw used by the simulation kernels.
std::size_t draw_type(std::span<const double> cumulative_weights, double u);
std::vector<double> cumulative_weights(const Population& pop);

}  // namespace mfg
