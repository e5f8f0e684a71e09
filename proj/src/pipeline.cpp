#include "mfg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfg/error.hpp"
#include "mfg/verify.hpp"

namespace mfg {

namespace {

using json = nlohmann::json;

constexpr std::size_t kMopDraws = 10000;
constexpr double kMopSupermartingaleTol = 1e-12;
constexpr double kIdentityTol = 1e-10;
constexpr double kJIdentityTol = 1e-9;
constexpr double kExactTol = 1e-12;
constexpr double kNuHatTol = 1e-8;
constexpr double kStdErrUnits = 3.0;
constexpr double kDeviationUnits = 2.0;

Check make_check(std::string name, double measured, double tolerance, std::string relation = "<=") {
    bool pass = false;
    if (relation == "<=") {
        pass = measured <= tolerance;
    } else if (relation == ">=") {
        pass = measured >= tolerance;
    } else if (relation == ">") {
        pass = measured > tolerance;
    }
    return {std::move(name), measured, tolerance, std::move(relation), pass};
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("cannot write " + path.string());
        row(header);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
        out_ << "\r\n";
    }

private:
    std::ofstream out_;
};

std::string num(double v) { return csv_number(v); }
std::string idx(std::size_t v) { return std::to_string(v); }

struct RunContext {
    const ScenarioConfig& config;
    Population pop;
    std::filesystem::path dir;
    RunResult& result;

    std::filesystem::path file(const std::string& name) {
        result.files.push_back(name);
        return dir / name;
    }
};

void write_thresholds(RunContext& ctx, const std::string& name, const std::vector<std::size_t>& types) {
    CsvWriter csv(ctx.file(name), {"type", "sigma0_upper", "sigma0_lower", "crossover", "valid"});
    for (std::size_t k : types) {
        const Thresholds th = sigma0_thresholds(ctx.pop, k, 0.0);
        csv.row({idx(k), num(th.sigma0_upper), num(th.sigma0_lower), num(th.crossover()), th.valid ? "1" : "0"});
    }
}

void terminal_checks(RunContext& ctx, const EquilibriumSolution& sol) {
    double c_gap = 0.0, y_gap = 0.0, cross = 0.0;
    const std::size_t last = sol.grid.steps();
    std::vector<double> y(sol.types());
    for (std::size_t k = 0; k < sol.types(); ++k) {
        c_gap = std::max(c_gap, std::abs(sol.c_star[k][last] - sol.d_coeff[k]));
        y_gap = std::max(y_gap, std::abs(sol.y_tilde[k][last]));
    }
    for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
        for (std::size_t k = 0; k < sol.types(); ++k) y[k] = sol.y_tilde[k][i];
        const auto c = consumption_from_tilde_y(ctx.pop, y);
        for (std::size_t k = 0; k < sol.types(); ++k) {
            cross = std::max(cross, std::abs(c[k] - sol.c_star[k][i]) / sol.c_star[k][i]);
        }
    }
    ctx.result.checks.push_back(make_check("terminal_c_equals_D", c_gap, kIdentityTol));
    ctx.result.checks.push_back(make_check("terminal_y_tilde_zero", y_gap, kIdentityTol));
    ctx.result.checks.push_back(make_check("c_from_y_tilde_identity", cross, kIdentityTol));
}

void run_solve(RunContext& ctx) {
    const auto sol = solve_equilibrium(ctx.pop);
    write_equilibrium_csv(ctx.file("equilibrium.csv"), sol);
    std::vector<std::size_t> all(sol.types());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    write_thresholds(ctx, "thresholds.csv", all);

    double riccati = 0.0;
    for (std::size_t k = 0; k < sol.types(); ++k) {
        const GridCurve rk = solve_riccati_numeric(ctx.pop, k);
        for (std::size_t i = 0; i < rk.size(); ++i) {
            riccati = std::max(riccati, std::abs(rk[i] - sol.c_star[k][i]) / sol.c_star[k][i]);
        }
    }
    ctx.result.checks.push_back(make_check("riccati_agreement", riccati, ctx.config.tolerances.riccati_tol));
    terminal_checks(ctx, sol);
}

void run_verify(RunContext& ctx, const RunOptions& options) {
    const auto sol =
        options.solution.empty() ? solve_equilibrium(ctx.pop) : read_equilibrium_csv(options.solution, ctx.pop);
    const auto& tol = ctx.config.tolerances;

    const auto residual = bsde_residual(ctx.pop, sol);
    {
        CsvWriter csv(ctx.file("residual.csv"), {"t", "type", "residual"});
        for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
            for (std::size_t k = 0; k < sol.types(); ++k) {
                csv.row({num(sol.grid.time(i)), idx(k), num(residual.residual[k][i])});
            }
        }
    }
    ctx.result.checks.push_back(make_check("bsde_residual_sup", residual.sup_norm, tol.residual_tol));

    double j_gap = 0.0;
    for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
        const double t = sol.grid.time(i);
        for (std::size_t k = 0; k < sol.types(); ++k) {
            const double a = sol.a_coeff[k][i];
            j_gap = std::max(j_gap, std::abs(eval_J(ctx.pop, k, t, 0.0, 0.0) + a) / std::max(std::abs(a), 1e-6));
        }
    }
    ctx.result.checks.push_back(make_check("j_identity_relative", j_gap, kJIdentityTol));

    const CounterRng rng(ctx.config.mc.seed);
    const auto pos = mop_random_check(kMopDraws, rng, GammaRegime::positive);
    const auto neg = mop_random_check(kMopDraws, rng, GammaRegime::negative);
    ctx.result.checks.push_back(
        make_check("mop_drift_nonpositive", std::max(pos.max_drift, neg.max_drift), kMopSupermartingaleTol));
    ctx.result.checks.push_back(make_check("mop_drift_zero_at_optimum",
                                           std::max(pos.max_abs_at_optimum, neg.max_abs_at_optimum), tol.drift_tol));

    const auto flow = mean_field_flow(ctx.pop, sol, common_noise_path(sol.grid, rng, 0));
    const auto rel = relation_check(ctx.pop, sol, flow);
    ctx.result.checks.push_back(make_check("relation_investment", rel.investment_gap, kExactTol));
    ctx.result.checks.push_back(make_check("relation_nu_hat", rel.nu_hat_gap, kNuHatTol));
    ctx.result.checks.push_back(make_check("relation_z0", rel.z0_gap, kExactTol));
    terminal_checks(ctx, sol);
}

void run_simulate(RunContext& ctx, const RunOptions& options) {
    const auto sol = solve_equilibrium(ctx.pop);
    const auto& mc = ctx.config.mc;
    const CounterRng rng(mc.seed);
    ConsistencyOptions copt;
    copt.stratified = mc.stratified;
    const auto report = consistency_test(ctx.pop, sol, mc.n_agents, mc.n_w0_paths, rng, copt, options.policy);
    {
        CsvWriter csv(ctx.file("flow.csv"), {"path", "t", "mu_hat", "nu_hat"});
        for (std::size_t p = 0; p < report.flows.size(); ++p) {
            const auto& f = report.flows[p];
            for (std::size_t i = 0; i < f.mu_hat.size(); ++i) {
                csv.row({idx(p), num(sol.grid.time(i)), num(f.mu_hat[i]), num(f.nu_hat[i])});
            }
        }
    }
    {
        CsvWriter csv(ctx.file("consistency.csv"),
                      {"path", "t", "empirical_mean", "std_error", "mu_hat", "deviation"});
        for (const auto& p : report.probes) {
            csv.row({idx(p.path), num(p.t), num(p.empirical_mean), num(p.std_error), num(p.mu_hat),
                     num(p.deviation)});
        }
    }
    ctx.result.checks.push_back(make_check("consistency_max_deviation", report.max_deviation, kStdErrUnits));

    const FlowModel flow(ctx.pop, sol);
    CsvWriter csv(ctx.file("value.csv"), {"type", "value_function", "mc_mean", "mc_std_error", "deviation"});
    for (std::size_t k = 0; k < ctx.pop.size(); ++k) {
        const double v = value_function(ctx.pop, k, sol);
        const auto est = estimate_utility(ctx.pop, k, Strategy::equilibrium(sol, k), flow, mc.n_samples, rng,
                                          options.policy);
        const double gap = std::abs(est.mean - v);
        const double dev = est.std_error > 0.0 ? gap / est.std_error : (gap <= kExactTol ? 0.0 : HUGE_VAL);
        csv.row({idx(k), num(v), num(est.mean), num(est.std_error), num(dev)});
        ctx.result.checks.push_back(make_check("value_match_type" + idx(k), dev, kStdErrUnits));
    }
}

void run_deviate(RunContext& ctx, const RunOptions& options) {
    const auto sol = solve_equilibrium(ctx.pop);
    const auto& mc = ctx.config.mc;
    const std::size_t k = mc.probe_type;
    const auto library = perturbation_library(sol, k, ctx.config.bounds);
    const auto report =
        deviation_test(ctx.pop, k, sol, library, mc.n_samples, CounterRng(mc.seed), ctx.config.bounds, options.policy);
    CsvWriter csv(ctx.file("deviation.csv"), {"perturbation", "delta", "std_error", "large", "flagged"});
    double min_z = HUGE_VAL, min_large_z = HUGE_VAL;
    auto z_of = [](const DeviationRow& r) {
        return r.std_error > 0.0 ? r.delta / r.std_error : (r.delta == 0.0 ? 0.0 : std::copysign(HUGE_VAL, r.delta));
    };
    for (const auto& r : report.rows) {
        csv.row({r.name, num(r.delta), num(r.std_error), r.large ? "1" : "0", r.flagged ? "1" : "0"});
        min_z = std::min(min_z, z_of(r));
        if (r.large) min_large_z = std::min(min_large_z, z_of(r));
    }
    ctx.result.checks.push_back(make_check("no_profitable_deviation_min_z", min_z, -kDeviationUnits, ">="));
    if (min_large_z < HUGE_VAL) {
        ctx.result.checks.push_back(make_check("large_perturbations_min_z", min_large_z, kDeviationUnits, ">"));
    }
}

void run_sweep(RunContext& ctx) {
    const auto& s = ctx.config.sweep;
    const auto res = sweep_sensitivity(ctx.config, s);
    {
        CsvWriter csv(ctx.file("sweep.csv"), {"value", "pi_star", "c_star", "flagged"});
        for (const auto& r : res.rows) csv.row({num(r.value), num(r.pi_star), num(r.c_star), r.flagged ? "1" : "0"});
    }
    write_thresholds(ctx, "thresholds.csv", {s.probe_type});

    const double cell = (s.hi - s.lo) / static_cast<double>(s.points - 1);
    const double cross = res.thresholds.crossover();
    if (s.parameter == "sigma0" && s.mode == SweepMode::individual && res.thresholds.valid && cross > s.lo + cell &&
        cross < s.hi - cell) {
        const auto located = slope_sign_change(res.rows);
        ctx.result.checks.push_back(
            make_check("sigma0_threshold_located", located ? std::abs(*located - cross) : HUGE_VAL, cell));
    }
}

void write_manifest(RunContext& ctx) {
    ctx.result.files.push_back("manifest.json");
    json m;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(ctx.config.source)));
    m["command"] = command_name(ctx.result.command);
    m["config_hash"] = hash;
    m["seed"] = ctx.config.mc.seed;
    m["n_steps"] = ctx.config.n_steps;
    m["files"] = ctx.result.files;
    json checks = json::array();
    for (const auto& c : ctx.result.checks) {
        json j{{"name", c.name}, {"relation", c.relation}, {"pass", c.pass}};
        j["measured"] = std::isfinite(c.measured) ? json(c.measured) : json(csv_number(c.measured));
        j["tolerance"] = c.tolerance;
        checks.push_back(std::move(j));
    }
    m["checks"] = std::move(checks);
    if (!ctx.result.error.empty()) m["error"] = ctx.result.error;
    m["overall"] = ctx.result.ok();
    std::ofstream out(ctx.dir / "manifest.json");
    out << m.dump(2) << "\n";
}

// Probe outputs at t = 0 with optional frozen aggregates; no validation, so
// flagged rows still produce numbers when the formulas are defined.
std::pair<double, double> probe_outputs(const Population& pop, std::size_t k, const std::vector<Aggregates>* frozen) {
    const TimeGrid& grid = pop.grid;
    GridCurve b = GridCurve::filled(grid, 0.0);
    Aggregates agg0;
    for (std::size_t i = 0; i < grid.knots(); ++i) {
        const Aggregates agg = frozen ? (*frozen)[i] : aggregates_at_knot(pop, i);
        if (i == 0) agg0 = agg;
        const TypeSnapshot a = snapshot_at_knot(pop.types[k], i);
        b[i] = coefficient_b(a, coefficient_a(a, agg), agg);
    }
    const TypeSnapshot a0 = snapshot_at_knot(pop.types[k], 0);
    const double pi = investment_rate(a0, agg0.phi, agg0.psi);
    const double c = consumption_path(b, coefficient_d(a0, agg0)).c[0];
    return {pi, c};
}

void set_parameter(AgentType& a, const std::string& p, double value, const TimeGrid& grid) {
    if (p == "h") {
        a.h = ParamCurve::constant(grid, value);
    } else if (p == "sigma") {
        a.sigma = ParamCurve::constant(grid, value);
    } else if (p == "sigma0") {
        a.sigma0 = ParamCurve::constant(grid, value);
    } else if (p == "theta") {
        a.theta = value;
    } else if (p == "gamma") {
        a.gamma = value;
    } else if (p == "alpha") {
        a.alpha = value;
    } else {
        throw ConfigError("unknown sweep parameter " + p);
    }
}

void shift_parameter(AgentType& a, const std::string& p, double delta) {
    auto shift_curve = [&](ParamCurve& c) {
        for (double& v : c.mutable_values()) v += delta;
    };
    if (p == "h") {
        shift_curve(a.h);
    } else if (p == "sigma") {
        shift_curve(a.sigma);
    } else if (p == "sigma0") {
        shift_curve(a.sigma0);
    } else if (p == "theta") {
        a.theta += delta;
    } else if (p == "gamma") {
        a.gamma += delta;
    } else if (p == "alpha") {
        a.alpha += delta;
    } else {
        throw ConfigError("unknown sweep parameter " + p);
    }
}

double base_value(const AgentType& a, const std::string& p) {
    if (p == "h") return a.h.at_knot(0);
    if (p == "sigma") return a.sigma.at_knot(0);
    if (p == "sigma0") return a.sigma0.at_knot(0);
    if (p == "theta") return a.theta;
    if (p == "gamma") return a.gamma;
    if (p == "alpha") return a.alpha;
    throw ConfigError("unknown sweep parameter " + p);
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "solve") return Command::solve;
    if (name == "verify") return Command::verify;
    if (name == "simulate") return Command::simulate;
    if (name == "deviate") return Command::deviate;
    if (name == "sweep") return Command::sweep;
    throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::verify: return "verify";
        case Command::simulate: return "simulate";
        case Command::deviate: return "deviate";
        case Command::sweep: return "sweep";
    }
    return "unknown";
}

bool RunResult::ok() const {
    return error.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

RunResult run(Command command, const ScenarioConfig& config, const RunOptions& options) {
    RunResult result;
    result.command = command;
    const std::filesystem::path dir = options.out_dir.empty() ? std::filesystem::path(config.output) : options.out_dir;
    std::filesystem::create_directories(dir);
    RunContext ctx{config, config.population(), dir, result};
    try {
        switch (command) {
            case Command::solve: run_solve(ctx); break;
            case Command::verify: run_verify(ctx, options); break;
            case Command::simulate: run_simulate(ctx, options); break;
            case Command::deviate: run_deviate(ctx, options); break;
            case Command::sweep: run_sweep(ctx); break;
        }
    } catch (const Error& e) {
        result.error = e.what();
    }
    write_manifest(ctx);
    return result;
}

std::string render_summary(const RunResult& r) {
    std::ostringstream os;
    for (const auto& c : r.checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << csv_number(c.measured) << " " << c.relation << " "
           << csv_number(c.tolerance) << "\n";
    }
    if (!r.error.empty()) os << "ERROR " << r.error << "\n";
    os << command_name(r.command) << ": " << (r.ok() ? "ok" : "FAILED") << "\n";
    return os.str();
}

SweepResult sweep_sensitivity(const ScenarioConfig& config, const SweepSettings& s) {
    if (s.points < 3 || !(s.hi > s.lo)) throw DomainError("sweep: need >= 3 points and lo < hi");
    const Population base = config.population();
    const std::size_t k = s.probe_type;
    if (k >= base.size()) throw DomainError("sweep: probe type out of range");

    std::vector<Aggregates> frozen;
    for (std::size_t i = 0; i < base.grid.knots(); ++i) frozen.push_back(aggregates_at_knot(base, i));

    SweepResult out;
    out.thresholds = sigma0_thresholds(snapshot_at_knot(base.types[k], 0), frozen[0].phi, frozen[0].psi);
    const double probe_base = base_value(base.types[k], s.parameter);
    for (std::size_t j = 0; j < s.points; ++j) {
        const double v = s.lo + (s.hi - s.lo) * static_cast<double>(j) / static_cast<double>(s.points - 1);
        Population pop = base;
        if (s.mode == SweepMode::individual) {
            set_parameter(pop.types[k], s.parameter, v, pop.grid);
        } else {
            for (std::size_t i = 0; i < pop.size(); ++i) {
                if (i != k) shift_parameter(pop.types[i], s.parameter, v - probe_base);
            }
        }
        SweepRow row;
        row.value = v;
        try {
            row.flagged = !validate(pop).ok();
        } catch (const StructuralError&) {
            row.flagged = true;
        }
        try {
            std::tie(row.pi_star, row.c_star) =
                probe_outputs(pop, k, s.mode == SweepMode::individual ? &frozen : nullptr);
        } catch (const Error&) {
            row.pi_star = row.c_star = NAN;
            row.flagged = true;
        }
        out.rows.push_back(row);
    }
    return out;
}

std::optional<double> slope_sign_change(const std::vector<SweepRow>& rows) {
    std::vector<const SweepRow*> ok;
    for (const auto& r : rows) {
        if (!r.flagged && std::isfinite(r.pi_star)) ok.push_back(&r);
    }
    int prev_sign = 0;
    for (std::size_t j = 0; j + 1 < ok.size(); ++j) {
        const double slope = (ok[j + 1]->pi_star - ok[j]->pi_star) / (ok[j + 1]->value - ok[j]->value);
        const int sign = slope > 0.0 ? 1 : (slope < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (prev_sign != 0 && sign != prev_sign) return ok[j]->value;
        prev_sign = sign;
    }
    return std::nullopt;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
    return buf;
}

void write_equilibrium_csv(const std::filesystem::path& path, const EquilibriumSolution& sol) {
    CsvWriter csv(path, {"t", "type", "pi_star", "c_star", "y_tilde", "phi", "psi", "z0"});
    for (std::size_t i = 0; i < sol.grid.knots(); ++i) {
        for (std::size_t k = 0; k < sol.types(); ++k) {
            csv.row({num(sol.grid.time(i)), idx(k), num(sol.pi_star[k][i]), num(sol.c_star[k][i]),
                     num(sol.y_tilde[k][i]), num(sol.phi[i]), num(sol.psi[i]), num(sol.z0[k][i])});
        }
    }
}

EquilibriumSolution read_equilibrium_csv(const std::filesystem::path& path, const Population& pop) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot read " + path.string());
    EquilibriumSolution sol = solve_equilibrium(pop);
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,type,pi_star,c_star,y_tilde,phi,psi,z0") {
        throw StructuralError(path.string() + ": unexpected header '" + line + "'");
    }
    const std::size_t expected = sol.grid.knots() * sol.types();
    std::size_t count = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(std::strtod(cell.c_str(), nullptr));
        if (f.size() != 8 || count >= expected) {
            throw StructuralError(path.string() + ": malformed row " + std::to_string(count + 2));
        }
        const std::size_t i = count / sol.types();
        const auto k = static_cast<std::size_t>(f[1]);
        if (k != count % sol.types() || std::abs(f[0] - sol.grid.time(i)) > 1e-12 * std::max(1.0, sol.grid.horizon())) {
            throw StructuralError(path.string() + ": row " + std::to_string(count + 2) + " does not match the grid");
        }
        sol.pi_star[k][i] = f[2];
        sol.c_star[k][i] = f[3];
        sol.y_tilde[k][i] = f[4];
        sol.phi[i] = f[5];
        sol.psi[i] = f[6];
        sol.z0[k][i] = f[7];
        ++count;
    }
    if (count != expected) {
        throw StructuralError(path.string() + ": expected " + std::to_string(expected) + " rows, found " +
                              std::to_string(count));
    }
    return sol;
}

}  // namespace mfg
