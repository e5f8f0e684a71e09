// mfg-consume: solve, verify and simulate mean-field consumption/investment equilibria.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mfg/config.hpp"
#include "mfg/montecarlo.hpp"
#include "mfg/pipeline.hpp"

namespace {

constexpr int kUsageError = 2;

void apply_thread_cap() {
    const char* env = std::getenv("MFG_CONSUME_THREADS");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
        std::cerr << "warning: ignoring MFG_CONSUME_THREADS=" << env << "\n";
        return;
    }
    mfg::set_thread_cap(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form mean-field portfolio/consumption equilibria and their verification"};
    std::string command, config_path, out_dir, solution, sweep_param, sweep_mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps, samples, agents, paths, points, probe;
    std::optional<double> lo, hi;
    bool serial = false;

    app.add_option("command", command, "solve | verify | simulate | deviate | sweep")
        ->required()
        ->check(CLI::IsMember({"solve", "verify", "simulate", "deviate", "sweep"}));
    app.add_option("--config", config_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_option("--steps", steps, "Time steps (overrides the config)")->check(CLI::PositiveNumber);
    app.add_option("--samples", samples, "Monte-Carlo samples per estimate")->check(CLI::PositiveNumber);
    app.add_option("--agents", agents, "Agents per common-noise path (simulate)")->check(CLI::Range(2ul, ~0ul));
    app.add_option("--paths", paths, "Common-noise paths (simulate)")->check(CLI::PositiveNumber);
    app.add_option("--solution", solution, "verify: re-read this equilibrium.csv")->check(CLI::ExistingFile);
    app.add_option("--param", sweep_param, "sweep: h | sigma | sigma0 | theta | gamma | alpha")
        ->check(CLI::IsMember({"h", "sigma", "sigma0", "theta", "gamma", "alpha"}));
    app.add_option("--lo", lo, "sweep: range start");
    app.add_option("--hi", hi, "sweep: range end");
    app.add_option("--points", points, "sweep: number of values")->check(CLI::Range(3ul, ~0ul));
    app.add_option("--mode", sweep_mode, "sweep: individual | population")
        ->check(CLI::IsMember({"individual", "population"}));
    app.add_option("--probe", probe, "Probe type index for deviate and sweep");
    app.add_flag("--serial", serial, "Use the serial reference kernels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsageError;
    }
    apply_thread_cap();

    mfg::ScenarioConfig cfg;
    try {
        cfg = mfg::load_config(config_path);
        if (seed) cfg.mc.seed = *seed;
        if (steps) cfg.n_steps = *steps;
        if (samples) cfg.mc.n_samples = *samples;
        if (agents) cfg.mc.n_agents = *agents;
        if (paths) cfg.mc.n_w0_paths = *paths;
        if (!sweep_param.empty()) cfg.sweep.parameter = sweep_param;
        if (lo) cfg.sweep.lo = *lo;
        if (hi) cfg.sweep.hi = *hi;
        if (points) cfg.sweep.points = *points;
        if (!sweep_mode.empty()) {
            cfg.sweep.mode = sweep_mode == "population" ? mfg::SweepMode::population : mfg::SweepMode::individual;
        }
        if (probe) cfg.mc.probe_type = cfg.sweep.probe_type = *probe;
        mfg::revalidate(cfg);
    } catch (const mfg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }

    mfg::RunOptions options;
    options.out_dir = out_dir;
    options.solution = solution;
    options.policy = serial ? mfg::ExecPolicy::serial : mfg::ExecPolicy::parallel;
    try {
        const auto result = mfg::run(mfg::parse_command(command), cfg, options);
        std::cout << mfg::render_summary(result);
        return result.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
