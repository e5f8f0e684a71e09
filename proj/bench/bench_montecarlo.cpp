// Serial reference vs OpenMP kernels on the reference population.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "mfg/closedform.hpp"
#include "mfg/montecarlo.hpp"

namespace {

mfg::Population reference(std::size_t steps) {
    const mfg::TimeGrid g(1.0, steps);
    auto type = [&](const char* name, double w, double x0, double gamma, double theta, double alpha, double h,
                    double s, double s0) {
        mfg::AgentType a;
        a.name = name;
        a.weight = w;
        a.x0 = x0;
        a.gamma = gamma;
        a.theta = theta;
        a.alpha = alpha;
        a.h = mfg::ParamCurve::constant(g, h);
        a.sigma = mfg::ParamCurve::constant(g, s);
        a.sigma0 = mfg::ParamCurve::constant(g, s0);
        return a;
    };
    mfg::Population pop;
    pop.grid = g;
    pop.types = {type("growth", 0.6, 1.0, 0.5, 0.5, 1.2, 0.08, 0.25, 0.15),
                 type("cautious", 0.4, 1.5, -1.0, 0.8, 0.8, 0.05, 0.20, 0.20)};
    return pop;
}

void estimate(benchmark::State& state, mfg::ExecPolicy policy) {
    const auto pop = reference(200);
    const auto sol = mfg::solve_equilibrium(pop);
    const mfg::FlowModel flow(pop, sol);
    const auto strategy = mfg::Strategy::equilibrium(sol, 0);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mfg::estimate_utility(pop, 0, strategy, flow, n, mfg::CounterRng(1), policy));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void consistency(benchmark::State& state, mfg::ExecPolicy policy) {
    const auto pop = reference(200);
    const auto sol = mfg::solve_equilibrium(pop);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mfg::consistency_test(pop, sol, n, 1, mfg::CounterRng(1), {}, policy));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(estimate, serial, mfg::ExecPolicy::serial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(estimate, parallel, mfg::ExecPolicy::parallel)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(consistency, serial, mfg::ExecPolicy::serial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(consistency, parallel, mfg::ExecPolicy::parallel)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
