#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfg/closedform.hpp"
#include "mfg/grid.hpp"
#include "mfg/population.hpp"
#include "mfg/rng.hpp"

namespace mfg {

/// serial is the reference path; parallel runs the same per-sample kernel under
/// OpenMP. Both reduce in the same fixed order, so their outputs are identical.
enum class ExecPolicy { serial, parallel };

/// Caps the OpenMP team size (no-op without OpenMP). Values < 1 are ignored.
void set_thread_cap(int threads);
int thread_cap();

struct StrategyBounds {
    double pi_cap = 10.0;
    double c_min = 1e-3;
    double c_max = 10.0;
};

/// Deterministic investment/consumption curves, one value per knot.
struct Strategy {
    std::vector<double> pi;
    std::vector<double> c;

    static Strategy equilibrium(const EquilibriumSolution& sol, std::size_t k);
    static Strategy constant(const TimeGrid& grid, double pi, double c);

    /// DomainError unless sized to the grid with |pi| <= pi_cap and c in [c_min, c_max].
    void check(const TimeGrid& grid, const StrategyBounds& bounds) const;
};

/// Brownian increments on the grid: one shared common-noise path and
/// n_samples idiosyncratic paths, each N(0, dt).
struct NoiseBundle {
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    std::vector<double> w0_increments;
    std::vector<std::vector<double>> w_increments;

    /// Common path `path` and idiosyncratic samples 0..n_samples-1; draws are
    /// addressed by (seed, sample, step) and do not depend on n_samples.
    static NoiseBundle generate(const TimeGrid& grid, const CounterRng& rng, std::size_t n_samples,
                                std::uint64_t path = 0);
};

/// Log-geometric-mean processes conditional on one common-noise path.
struct MeanFieldFlow {
    GridCurve mu_hat;  // E[log X*_t | F0_t]
    GridCurve nu_hat;  // E[log c*_t] + mu_hat
    std::vector<double> w0_increments;
};

/// Deterministic ingredients of the flow; computing a flow for a given
/// common-noise path is then a single O(n) pass.
class FlowModel {
public:
    FlowModel(const Population& pop, const EquilibriumSolution& sol);

    MeanFieldFlow flow(std::span<const double> w0_increments) const;
    void fill(std::span<const double> w0_increments, std::span<double> mu_hat, std::span<double> nu_hat) const;

    const TimeGrid& grid() const noexcept { return grid_; }
    double mean_log_x0() const noexcept { return mean_log_x0_; }

private:
    TimeGrid grid_;
    double mean_log_x0_ = 0.0;
    std::vector<double> drift_;       // E[pi h - c - pi^2 S / 2] at each knot
    std::vector<double> loading_;     // E[pi sigma0]
    std::vector<double> mean_log_c_;  // E[log c*]
};

/// Log-wealth under a strategy: Euler step with left-endpoint coefficients,
///   dX = (pi h - c - pi^2 (sigma^2 + sigma0^2)/2) dt + pi sigma dW + pi sigma0 dW0,
/// starting from log x0.
GridCurve simulate_wealth(const AgentType& type, const Strategy& strategy, std::span<const double> w_increments,
                          std::span<const double> w0_increments, const TimeGrid& grid);

MeanFieldFlow mean_field_flow(const Population& pop, const EquilibriumSolution& sol,
                              std::span<const double> w0_increments);

struct UtilityEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n); exactly 0 iff every sample is equal
    std::size_t n_samples = 0;
};

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);
UtilityEstimate summarize(std::span<const double> samples);

/// Monte-Carlo estimate of
///   J = E[(1/gamma) e^{gamma (X_T - theta mu_T)} + int_0^T (alpha/gamma) e^{gamma (log c + X - theta nu)} ds]
/// for type k under `strategy`. Each sample draws fresh W and W0 and rebuilds
/// the flow along its own W0 path; the time integral uses the trapezoid rule.
UtilityEstimate estimate_utility(const Population& pop, std::size_t k, const Strategy& strategy,
                                 const FlowModel& flow, std::size_t n, const CounterRng& rng,
                                 ExecPolicy policy = ExecPolicy::parallel);

struct Perturbation {
    std::string name;
    Strategy strategy;
    bool large = false;  // |pi shift| >= 0.5
};

/// Twenty deviations from the equilibrium of type k: constant pi shifts
/// +-{0.1, 0.5, 1}, consumption scalings x{0.5, 0.8, 1.25, 2}, pi bumps of +-0.5
/// on each third of the horizon and consumption x{0.5, 2} on each half. Values
/// are clamped into the admissible bounds.
std::vector<Perturbation> perturbation_library(const EquilibriumSolution& sol, std::size_t k,
                                               const StrategyBounds& bounds);

struct DeviationRow {
    std::string name;
    double delta = 0.0;  // J(equilibrium) - J(perturbation), paired
    double std_error = 0.0;
    bool large = false;
    bool flagged = false;  // delta < -2 std_error
};

struct DeviationReport {
    UtilityEstimate equilibrium;
    std::vector<DeviationRow> rows;
    bool any_flagged = false;
};

/// Paired common-random-number comparison of the equilibrium against each perturbation.
DeviationReport deviation_test(const Population& pop, std::size_t k, const EquilibriumSolution& sol,
                               std::span<const Perturbation> perturbations, std::size_t n, const CounterRng& rng,
                               const StrategyBounds& bounds = {}, ExecPolicy policy = ExecPolicy::parallel);

struct ConsistencyOptions {
    /// Deterministic per-type quotas instead of i.i.d. type draws.
    bool stratified = false;
    /// Knots to probe; empty selects five evenly spaced knots n/5, ..., n.
    std::vector<std::size_t> probe_knots;
};

struct ConsistencyProbe {
    std::size_t path = 0;
    std::size_t knot = 0;
    double t = 0.0;
    double empirical_mean = 0.0;
    double std_error = 0.0;
    double mu_hat = 0.0;
    double deviation = 0.0;  // |empirical - mu_hat| / std_error
};

struct ConsistencyReport {
    std::vector<ConsistencyProbe> probes;
    std::vector<MeanFieldFlow> flows;
    double max_deviation = 0.0;
    std::size_t n_agents = 0;
    std::size_t n_paths = 0;
};

/// For each common-noise path: simulate n_agents equilibrium agents (types by
/// weight, independent W shared across paths) and compare the empirical mean
/// log-wealth with the semi-analytic flow at the probe knots.
ConsistencyReport consistency_test(const Population& pop, const EquilibriumSolution& sol, std::size_t n_agents,
                                   std::size_t n_w0_paths, const CounterRng& rng,
                                   const ConsistencyOptions& options = {}, ExecPolicy policy = ExecPolicy::parallel);

/// Common-noise increments of path `path` (stream `common`).
std::vector<double> common_noise_path(const TimeGrid& grid, const CounterRng& rng, std::uint64_t path);

}  // namespace mfg
