#include "mfg/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "mfg/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfg {

namespace {

// Per-knot coefficients of the log-wealth SDE for one (type, strategy) pair.
struct CompiledStrategy {
    std::vector<double> drift;  // pi h - c - pi^2 S / 2
    std::vector<double> vol;    // pi sigma
    std::vector<double> vol0;   // pi sigma0
    std::vector<double> log_c;
};

CompiledStrategy compile(const AgentType& type, const Strategy& s, const TimeGrid& grid) {
    const std::size_t n = grid.knots();
    if (s.pi.size() != n || s.c.size() != n) {
        throw StructuralError("strategy length does not match the grid (" + std::to_string(n) + " knots)");
    }
    CompiledStrategy out;
    out.drift.resize(n);
    out.vol.resize(n);
    out.vol0.resize(n);
    out.log_c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = type.h.at_knot(i), sg = type.sigma.at_knot(i), s0 = type.sigma0.at_knot(i);
        const double pi = s.pi[i], c = s.c[i];
        if (!(c > 0.0)) throw DomainError("strategy consumption must be positive");
        out.drift[i] = pi * h - c - 0.5 * pi * pi * (sg * sg + s0 * s0);
        out.vol[i] = pi * sg;
        out.vol0[i] = pi * s0;
        out.log_c[i] = std::log(c);
    }
    return out;
}

struct Scratch {
    std::vector<double> dw, dw0, mu, nu;
    explicit Scratch(const TimeGrid& g) : dw(g.steps()), dw0(g.steps()), mu(g.knots()), nu(g.knots()) {}
};

// Runs body(i, scratch) for i in [0, n). Every sample writes only its own
// output slots, so the serial and parallel paths produce the same bytes.
template <class Body>
void for_each_sample(std::size_t n, const TimeGrid& grid, ExecPolicy policy, Body&& body) {
    const auto count = static_cast<std::int64_t>(n);
    if (policy == ExecPolicy::parallel) {
#pragma omp parallel
        {
            Scratch scratch(grid);
#pragma omp for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i), scratch);
        }
    } else {
        Scratch scratch(grid);
        for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i), scratch);
    }
}

// Sample i of the utility estimator: W from the first normal, W0 from the second.
void draw_sample_noise(const CounterRng& rng, std::size_t sample, double sqrt_dt, Scratch& s) {
    for (std::size_t j = 0; j < s.dw.size(); ++j) {
        const auto [z, z0] = rng.normals(Stream::idiosyncratic, sample, j);
        s.dw[j] = sqrt_dt * z;
        s.dw0[j] = sqrt_dt * z0;
    }
}

double payoff(const AgentType& type, const CompiledStrategy& cs, const TimeGrid& grid, const Scratch& s) {
    const double g = type.gamma, th = type.theta;
    const double coef = type.alpha / g;
    const double dt = grid.dt();
    double x = std::log(type.x0);
    double f_prev = coef * std::exp(g * (cs.log_c[0] + x - th * s.nu[0]));
    double running = 0.0;
    for (std::size_t j = 0; j < grid.steps(); ++j) {
        x += cs.drift[j] * dt + cs.vol[j] * s.dw[j] + cs.vol0[j] * s.dw0[j];
        const double f = coef * std::exp(g * (cs.log_c[j + 1] + x - th * s.nu[j + 1]));
        running += 0.5 * dt * (f_prev + f);
        f_prev = f;
    }
    return std::exp(g * (x - th * s.mu[grid.steps()])) / g + running;
}

}  // namespace

void set_thread_cap(int threads) {
#ifdef _OPENMP
    if (threads >= 1) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int thread_cap() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Strategy Strategy::equilibrium(const EquilibriumSolution& sol, std::size_t k) {
    if (k >= sol.types()) throw DomainError("type index out of range");
    return {sol.pi_star[k].values, sol.c_star[k].values};
}

Strategy Strategy::constant(const TimeGrid& grid, double pi, double c) {
    return {std::vector<double>(grid.knots(), pi), std::vector<double>(grid.knots(), c)};
}

void Strategy::check(const TimeGrid& grid, const StrategyBounds& bounds) const {
    if (pi.size() != grid.knots() || c.size() != grid.knots()) {
        throw DomainError("strategy length does not match the grid");
    }
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (!std::isfinite(pi[i]) || std::abs(pi[i]) > bounds.pi_cap) {
            throw DomainError("strategy pi outside [-pi_cap, pi_cap] at knot " + std::to_string(i));
        }
        if (!(c[i] >= bounds.c_min && c[i] <= bounds.c_max)) {
            throw DomainError("strategy c outside [c_min, c_max] at knot " + std::to_string(i));
        }
    }
}

std::vector<double> common_noise_path(const TimeGrid& grid, const CounterRng& rng, std::uint64_t path) {
    const double sqrt_dt = std::sqrt(grid.dt());
    std::vector<double> out(grid.steps());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = sqrt_dt * rng.normals(Stream::common, path, j).first;
    return out;
}

NoiseBundle NoiseBundle::generate(const TimeGrid& grid, const CounterRng& rng, std::size_t n_samples,
                                  std::uint64_t path) {
    NoiseBundle b;
    b.seed = rng.seed();
    b.n_samples = n_samples;
    b.w0_increments = common_noise_path(grid, rng, path);
    const double sqrt_dt = std::sqrt(grid.dt());
    b.w_increments.assign(n_samples, std::vector<double>(grid.steps()));
    for (std::size_t a = 0; a < n_samples; ++a) {
        for (std::size_t j = 0; j < grid.steps(); ++j) {
            b.w_increments[a][j] = sqrt_dt * rng.normals(Stream::idiosyncratic, a, j).first;
        }
    }
    return b;
}

FlowModel::FlowModel(const Population& pop, const EquilibriumSolution& sol) : grid_(sol.grid) {
    if (sol.types() != pop.size()) throw StructuralError("solution does not match the population");
    const std::size_t n = grid_.knots();
    drift_.assign(n, 0.0);
    loading_.assign(n, 0.0);
    mean_log_c_.assign(n, 0.0);
    for (std::size_t k = 0; k < pop.size(); ++k) {
        const auto& type = pop.types[k];
        const double w = type.weight;
        mean_log_x0_ += w * std::log(type.x0);
        for (std::size_t i = 0; i < n; ++i) {
            const double h = type.h.at_knot(i), sg = type.sigma.at_knot(i), s0 = type.sigma0.at_knot(i);
            const double pi = sol.pi_star[k][i], c = sol.c_star[k][i];
            drift_[i] += w * (pi * h - c - 0.5 * pi * pi * (sg * sg + s0 * s0));
            loading_[i] += w * pi * s0;
            mean_log_c_[i] += w * std::log(c);
        }
    }
}

void FlowModel::fill(std::span<const double> w0, std::span<double> mu, std::span<double> nu) const {
    if (w0.size() != grid_.steps() || mu.size() != grid_.knots() || nu.size() != grid_.knots()) {
        throw StructuralError("flow buffers do not match the grid");
    }
    const double dt = grid_.dt();
    mu[0] = mean_log_x0_;
    for (std::size_t j = 0; j < grid_.steps(); ++j) mu[j + 1] = mu[j] + drift_[j] * dt + loading_[j] * w0[j];
    for (std::size_t i = 0; i < grid_.knots(); ++i) nu[i] = mean_log_c_[i] + mu[i];
}

MeanFieldFlow FlowModel::flow(std::span<const double> w0) const {
    MeanFieldFlow f{GridCurve::filled(grid_, 0.0), GridCurve::filled(grid_, 0.0), {w0.begin(), w0.end()}};
    fill(w0, f.mu_hat.values, f.nu_hat.values);
    return f;
}

MeanFieldFlow mean_field_flow(const Population& pop, const EquilibriumSolution& sol,
                              std::span<const double> w0_increments) {
    return FlowModel(pop, sol).flow(w0_increments);
}

GridCurve simulate_wealth(const AgentType& type, const Strategy& strategy, std::span<const double> w,
                          std::span<const double> w0, const TimeGrid& grid) {
    if (w.size() != grid.steps() || w0.size() != grid.steps()) {
        throw StructuralError("noise increments do not match the grid");
    }
    const auto cs = compile(type, strategy, grid);
    GridCurve x = GridCurve::filled(grid, std::log(type.x0));
    for (std::size_t j = 0; j < grid.steps(); ++j) {
        x[j + 1] = x[j] + cs.drift[j] * grid.dt() + cs.vol[j] * w[j] + cs.vol0[j] * w0[j];
    }
    return x;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

UtilityEstimate summarize(std::span<const double> x) {
    UtilityEstimate e;
    e.n_samples = x.size();
    if (x.empty()) return e;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) {
        e.mean = *lo;
        return e;
    }
    const double n = static_cast<double>(x.size());
    e.mean = pairwise_sum(x) / n;
    if (x.size() < 2) return e;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - e.mean) * (x[i] - e.mean);
    e.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    return e;
}

UtilityEstimate estimate_utility(const Population& pop, std::size_t k, const Strategy& strategy,
                                 const FlowModel& flow, std::size_t n, const CounterRng& rng, ExecPolicy policy) {
    if (n == 0) throw DomainError("estimate_utility: n must be positive");
    if (k >= pop.size()) throw DomainError("type index out of range");
    const TimeGrid& grid = flow.grid();
    const auto cs = compile(pop.types[k], strategy, grid);
    const double sqrt_dt = std::sqrt(grid.dt());
    std::vector<double> samples(n);
    for_each_sample(n, grid, policy, [&](std::size_t i, Scratch& s) {
        draw_sample_noise(rng, i, sqrt_dt, s);
        flow.fill(s.dw0, s.mu, s.nu);
        samples[i] = payoff(pop.types[k], cs, grid, s);
    });
    return summarize(samples);
}

std::vector<Perturbation> perturbation_library(const EquilibriumSolution& sol, std::size_t k,
                                               const StrategyBounds& bounds) {
    const Strategy base = Strategy::equilibrium(sol, k);
    const TimeGrid& grid = sol.grid;
    const double horizon = grid.horizon();
    auto clamp_pi = [&](double v) { return std::clamp(v, -bounds.pi_cap, bounds.pi_cap); };
    auto clamp_c = [&](double v) { return std::clamp(v, bounds.c_min, bounds.c_max); };
    auto in_window = [&](std::size_t i, double lo, double hi, bool last) {
        const double t = grid.time(i);
        return t >= lo && (t < hi || (last && t <= hi));
    };

    std::vector<Perturbation> out;
    auto shift_pi = [&](const std::string& name, double delta, double lo, double hi, bool last) {
        Strategy s = base;
        for (std::size_t i = 0; i < s.pi.size(); ++i) {
            if (in_window(i, lo, hi, last)) s.pi[i] = clamp_pi(s.pi[i] + delta);
        }
        out.push_back({name, std::move(s), std::abs(delta) >= 0.5});
    };
    auto scale_c = [&](const std::string& name, double factor, double lo, double hi, bool last) {
        Strategy s = base;
        for (std::size_t i = 0; i < s.c.size(); ++i) {
            if (in_window(i, lo, hi, last)) s.c[i] = clamp_c(s.c[i] * factor);
        }
        out.push_back({name, std::move(s), false});
    };

    for (double d : {0.1, 0.5, 1.0}) {
        shift_pi("pi+" + std::to_string(d).substr(0, 3), d, 0.0, horizon, true);
        shift_pi("pi-" + std::to_string(d).substr(0, 3), -d, 0.0, horizon, true);
    }
    for (double f : {0.5, 0.8, 1.25, 2.0}) {
        std::string tag = std::to_string(f);
        tag.erase(tag.find_last_not_of('0') + 1);
        if (tag.back() == '.') tag.pop_back();
        scale_c("c*" + tag, f, 0.0, horizon, true);
    }
    const char* third[] = {"first", "middle", "last"};
    for (int j = 0; j < 3; ++j) {
        const double lo = horizon * j / 3.0, hi = horizon * (j + 1) / 3.0;
        shift_pi(std::string("pi+0.5@") + third[j] + "-third", 0.5, lo, hi, j == 2);
        shift_pi(std::string("pi-0.5@") + third[j] + "-third", -0.5, lo, hi, j == 2);
    }
    const char* half[] = {"first", "second"};
    for (int j = 0; j < 2; ++j) {
        const double lo = horizon * j / 2.0, hi = horizon * (j + 1) / 2.0;
        scale_c(std::string("c*0.5@") + half[j] + "-half", 0.5, lo, hi, j == 1);
        scale_c(std::string("c*2@") + half[j] + "-half", 2.0, lo, hi, j == 1);
    }
    return out;
}

DeviationReport deviation_test(const Population& pop, std::size_t k, const EquilibriumSolution& sol,
                               std::span<const Perturbation> perturbations, std::size_t n, const CounterRng& rng,
                               const StrategyBounds& bounds, ExecPolicy policy) {
    if (n == 0) throw DomainError("deviation_test: n must be positive");
    if (k >= pop.size()) throw DomainError("type index out of range");
    const FlowModel flow(pop, sol);
    const TimeGrid& grid = sol.grid;
    const auto eq = compile(pop.types[k], Strategy::equilibrium(sol, k), grid);
    std::vector<CompiledStrategy> alt;
    alt.reserve(perturbations.size());
    for (const auto& p : perturbations) {
        p.strategy.check(grid, bounds);
        alt.push_back(compile(pop.types[k], p.strategy, grid));
    }
    const std::size_t m = alt.size();
    const double sqrt_dt = std::sqrt(grid.dt());
    std::vector<double> base(n);
    std::vector<double> diff(n * m);
    for_each_sample(n, grid, policy, [&](std::size_t i, Scratch& s) {
        draw_sample_noise(rng, i, sqrt_dt, s);
        flow.fill(s.dw0, s.mu, s.nu);
        base[i] = payoff(pop.types[k], eq, grid, s);
        for (std::size_t p = 0; p < m; ++p) diff[p * n + i] = base[i] - payoff(pop.types[k], alt[p], grid, s);
    });

    DeviationReport report;
    report.equilibrium = summarize(base);
    for (std::size_t p = 0; p < m; ++p) {
        const auto e = summarize(std::span<const double>(diff).subspan(p * n, n));
        DeviationRow row{perturbations[p].name, e.mean, e.std_error, perturbations[p].large,
                         e.mean < -2.0 * e.std_error};
        report.any_flagged = report.any_flagged || row.flagged;
        report.rows.push_back(std::move(row));
    }
    return report;
}

ConsistencyReport consistency_test(const Population& pop, const EquilibriumSolution& sol, std::size_t n_agents,
                                   std::size_t n_w0_paths, const CounterRng& rng, const ConsistencyOptions& options,
                                   ExecPolicy policy) {
    if (n_agents < 2 || n_w0_paths == 0) {
        throw DomainError("consistency_test: need at least 2 agents and 1 common-noise path");
    }
    const TimeGrid& grid = sol.grid;
    const FlowModel flow(pop, sol);

    std::vector<std::size_t> probes = options.probe_knots;
    if (probes.empty()) {
        for (std::size_t j = 1; j <= 5; ++j) probes.push_back(std::max<std::size_t>(1, grid.steps() * j / 5));
    }
    for (std::size_t p : probes) {
        if (p >= grid.knots()) throw DomainError("consistency_test: probe knot outside the grid");
    }

    // Agent -> type. Stratified runs assign contiguous blocks with
    // largest-remainder quotas; otherwise types are i.i.d. draws.
    const std::size_t n_types = pop.size();
    std::vector<std::size_t> agent_type(n_agents);
    std::vector<std::size_t> quota(n_types, 0);
    if (options.stratified) {
        std::vector<std::pair<double, std::size_t>> rem;
        std::size_t used = 0;
        for (std::size_t k = 0; k < n_types; ++k) {
            const double exact = pop.types[k].weight * static_cast<double>(n_agents);
            quota[k] = static_cast<std::size_t>(std::floor(exact));
            used += quota[k];
            rem.emplace_back(exact - std::floor(exact), k);
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t j = 0; used < n_agents; ++j, ++used) ++quota[rem[j % rem.size()].second];
        for (std::size_t k = 0; k < n_types; ++k) {
            if (pop.types[k].weight > 0.0 && quota[k] < 2) {
                throw DomainError("consistency_test: too few agents to stratify type " + std::to_string(k));
            }
        }
        std::size_t a = 0;
        for (std::size_t k = 0; k < n_types; ++k) {
            for (std::size_t q = 0; q < quota[k]; ++q) agent_type[a++] = k;
        }
    } else {
        agent_type = sample_agents(pop, n_agents, rng);
    }

    std::vector<CompiledStrategy> compiled;
    for (std::size_t k = 0; k < n_types; ++k) {
        compiled.push_back(compile(pop.types[k], Strategy::equilibrium(sol, k), grid));
    }
    const double sqrt_dt = std::sqrt(grid.dt());
    const std::size_t n_probe = probes.size();

    ConsistencyReport report;
    report.n_agents = n_agents;
    report.n_paths = n_w0_paths;
    std::vector<double> at_probe(n_probe * n_agents);
    for (std::size_t path = 0; path < n_w0_paths; ++path) {
        const auto w0 = common_noise_path(grid, rng, path);
        MeanFieldFlow f = flow.flow(w0);
        for_each_sample(n_agents, grid, policy, [&](std::size_t a, Scratch&) {
            const auto& cs = compiled[agent_type[a]];
            double x = std::log(pop.types[agent_type[a]].x0);
            // Probe list is small; scan it at every knot.
            for (std::size_t j = 0; j <= grid.steps(); ++j) {
                for (std::size_t p = 0; p < n_probe; ++p) {
                    if (probes[p] == j) at_probe[p * n_agents + a] = x;
                }
                if (j == grid.steps()) break;
                const double dw = sqrt_dt * rng.normals(Stream::idiosyncratic, a, j).first;
                x += cs.drift[j] * grid.dt() + cs.vol[j] * dw + cs.vol0[j] * w0[j];
            }
        });

        for (std::size_t p = 0; p < n_probe; ++p) {
            const std::span<const double> vals(at_probe.data() + p * n_agents, n_agents);
            double mean = 0.0, se = 0.0;
            if (options.stratified) {
                double var = 0.0;
                std::size_t offset = 0;
                for (std::size_t k = 0; k < n_types; ++k) {
                    if (quota[k] == 0) continue;
                    const auto e = summarize(vals.subspan(offset, quota[k]));
                    const double w = pop.types[k].weight;
                    mean += w * e.mean;
                    var += w * w * e.std_error * e.std_error;
                    offset += quota[k];
                }
                se = std::sqrt(var);
            } else {
                const auto e = summarize(vals);
                mean = e.mean;
                se = e.std_error;
            }
            ConsistencyProbe probe;
            probe.path = path;
            probe.knot = probes[p];
            probe.t = grid.time(probes[p]);
            probe.empirical_mean = mean;
            probe.std_error = se;
            probe.mu_hat = f.mu_hat[probes[p]];
            const double gap = std::abs(mean - probe.mu_hat);
            probe.deviation = se > 0.0 ? gap / se : (gap <= 1e-12 ? 0.0 : HUGE_VAL);
            report.max_deviation = std::max(report.max_deviation, probe.deviation);
            report.probes.push_back(probe);
        }
        report.flows.push_back(std::move(f));
    }
    return report;
}

}  // namespace mfg
