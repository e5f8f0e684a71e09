#include "mfg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mfg {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& key, const std::string& what) {
    throw ConfigError(origin + ": " + key + ": " + what);
}

void allow_keys(const json& obj, const std::string& origin, const std::string& where,
                std::initializer_list<const char*> keys) {
    if (!obj.is_object()) fail(origin, where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
            fail(origin, where.empty() ? key : where + "." + key, "unknown key");
        }
    }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& origin,
                  const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(origin, where + key, "expected a number");
    return v.get<double>();
}

std::uint64_t get_count(const json& obj, const char* key, std::uint64_t fallback, const std::string& origin,
                        const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(origin, where + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& origin, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(origin, where + key, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback, const std::string& origin,
                       const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(origin, where + key, "expected a string");
    return v.get<std::string>();
}

CurveSpec get_curve(const json& obj, const char* key, const std::string& origin, const std::string& where) {
    if (!obj.contains(key)) fail(origin, where + key, "missing");
    const auto& v = obj.at(key);
    CurveSpec c;
    if (v.is_number()) {
        c.value = v.get<double>();
        return c;
    }
    if (!v.is_array() || v.empty()) fail(origin, where + key, "expected a number or a non-empty array");
    c.scalar = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(origin, where + key + "[" + std::to_string(i) + "]", "expected a number");
        c.values.push_back(v[i].get<double>());
    }
    return c;
}

// json::parse reports a byte offset; turn it into line:column.
std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ParamCurve CurveSpec::build(const TimeGrid& grid) const {
    return scalar ? ParamCurve::constant(grid, value) : ParamCurve(grid.horizon(), values);
}

Population ScenarioConfig::population() const {
    Population pop;
    pop.grid = TimeGrid(horizon, n_steps);
    pop.gamma_lb = gamma_lb;
    pop.sigma_lb = sigma_lb;
    for (const auto& t : types) {
        AgentType a;
        a.name = t.name;
        a.weight = t.weight;
        a.x0 = t.x0;
        a.gamma = t.gamma;
        a.theta = t.theta;
        a.alpha = t.alpha;
        a.h = t.h.build(pop.grid);
        a.sigma = t.sigma.build(pop.grid);
        a.sigma0 = t.sigma0.build(pop.grid);
        pop.types.push_back(std::move(a));
    }
    return pop;
}

void revalidate(const ScenarioConfig& cfg) {
    const std::string origin = "config";
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) fail(origin, "horizon", "must be finite and > 0");
    if (cfg.n_steps == 0) fail(origin, "n_steps", "must be >= 1");
    if (cfg.types.empty()) fail(origin, "population", "must list at least one type");
    for (std::size_t k = 0; k < cfg.types.size(); ++k) {
        for (const auto* c : {&cfg.types[k].h, &cfg.types[k].sigma, &cfg.types[k].sigma0}) {
            if (!c->scalar && c->values.size() != cfg.n_steps + 1) {
                fail(origin, "population[" + std::to_string(k) + "]",
                     "curve has " + std::to_string(c->values.size()) + " values, expected n_steps + 1 = " +
                         std::to_string(cfg.n_steps + 1));
            }
        }
    }
    const auto& tol = cfg.tolerances;
    if (!(tol.riccati_tol > 0.0 && tol.residual_tol > 0.0 && tol.drift_tol > 0.0)) {
        fail(origin, "tolerances", "every tolerance must be > 0");
    }
    const auto& b = cfg.bounds;
    if (!(b.c_min > 0.0 && b.c_max > b.c_min && b.pi_cap > 0.0)) {
        fail(origin, "bounds", "need 0 < c_min < c_max and pi_cap > 0");
    }
    if (cfg.mc.n_samples == 0 || cfg.mc.n_agents < 2 || cfg.mc.n_w0_paths == 0) {
        fail(origin, "mc", "need n_samples >= 1, n_agents >= 2, n_w0_paths >= 1");
    }
    if (cfg.mc.probe_type >= cfg.types.size()) fail(origin, "mc.probe_type", "out of range");
    if (cfg.sweep.probe_type >= cfg.types.size()) fail(origin, "sweep.probe_type", "out of range");
    if (cfg.sweep.points < 3) fail(origin, "sweep.points", "must be >= 3");
    if (!(cfg.sweep.hi > cfg.sweep.lo)) fail(origin, "sweep", "need lo < hi");

    const Population pop = cfg.population();
    ValidationReport report;
    try {
        report = validate(pop);
    } catch (const StructuralError& e) {
        throw ConfigError(origin + ": population: " + e.what());
    }
    if (!report.ok()) {
        std::ostringstream os;
        os << origin << ": population violates standing assumptions:";
        for (const auto& v : report.violations) {
            if (v.type < 0) {
                os << "\n  population: " << v.rule << " (value " << v.value << ")";
            } else {
                os << "\n  type '" << cfg.types[static_cast<std::size_t>(v.type)].name << "' (index " << v.type
                   << "): " << v.rule << " (value " << v.value << ")";
            }
        }
        throw ConfigError(os.str());
    }
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": syntax error at " + locate(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                          e.what());
    }
    allow_keys(root, origin, "",
               {"name", "description", "horizon", "n_steps", "population", "bounds", "mc", "tolerances", "output",
                "sweep"});

    ScenarioConfig cfg;
    cfg.source = text;
    cfg.horizon = get_number(root, "horizon", cfg.horizon, origin, "");
    cfg.n_steps = get_count(root, "n_steps", cfg.n_steps, origin, "");
    cfg.output = get_string(root, "output", cfg.output, origin, "");

    if (!root.contains("population") || !root.at("population").is_array()) {
        fail(origin, "population", "expected an array of type records");
    }
    const auto& types = root.at("population");
    for (std::size_t k = 0; k < types.size(); ++k) {
        const std::string where = "population[" + std::to_string(k) + "].";
        const auto& t = types[k];
        allow_keys(t, origin, "population[" + std::to_string(k) + "]",
                   {"name", "weight", "x0", "gamma", "theta", "alpha", "h", "sigma", "sigma0"});
        TypeSpec s;
        s.name = get_string(t, "name", "type" + std::to_string(k), origin, where);
        s.weight = get_number(t, "weight", types.size() == 1 ? 1.0 : NAN, origin, where);
        if (std::isnan(s.weight)) fail(origin, where + "weight", "required when there is more than one type");
        s.x0 = get_number(t, "x0", s.x0, origin, where);
        if (!t.contains("gamma")) fail(origin, where + "gamma", "missing");
        s.gamma = get_number(t, "gamma", s.gamma, origin, where);
        s.theta = get_number(t, "theta", s.theta, origin, where);
        s.alpha = get_number(t, "alpha", s.alpha, origin, where);
        s.h = get_curve(t, "h", origin, where);
        s.sigma = get_curve(t, "sigma", origin, where);
        s.sigma0 = get_curve(t, "sigma0", origin, where);
        cfg.types.push_back(std::move(s));
    }

    if (root.contains("bounds")) {
        const auto& b = root.at("bounds");
        allow_keys(b, origin, "bounds", {"gamma_lb", "sigma_lb", "c_min", "c_max", "pi_cap"});
        cfg.gamma_lb = get_number(b, "gamma_lb", cfg.gamma_lb, origin, "bounds.");
        cfg.sigma_lb = get_number(b, "sigma_lb", cfg.sigma_lb, origin, "bounds.");
        cfg.bounds.c_min = get_number(b, "c_min", cfg.bounds.c_min, origin, "bounds.");
        cfg.bounds.c_max = get_number(b, "c_max", cfg.bounds.c_max, origin, "bounds.");
        cfg.bounds.pi_cap = get_number(b, "pi_cap", cfg.bounds.pi_cap, origin, "bounds.");
    }
    if (root.contains("mc")) {
        const auto& m = root.at("mc");
        allow_keys(m, origin, "mc", {"n_samples", "n_agents", "n_w0_paths", "seed", "stratified", "probe_type"});
        cfg.mc.n_samples = get_count(m, "n_samples", cfg.mc.n_samples, origin, "mc.");
        cfg.mc.n_agents = get_count(m, "n_agents", cfg.mc.n_agents, origin, "mc.");
        cfg.mc.n_w0_paths = get_count(m, "n_w0_paths", cfg.mc.n_w0_paths, origin, "mc.");
        cfg.mc.seed = get_count(m, "seed", cfg.mc.seed, origin, "mc.");
        cfg.mc.stratified = get_bool(m, "stratified", cfg.mc.stratified, origin, "mc.");
        cfg.mc.probe_type = get_count(m, "probe_type", cfg.mc.probe_type, origin, "mc.");
    }
    if (root.contains("tolerances")) {
        const auto& t = root.at("tolerances");
        allow_keys(t, origin, "tolerances", {"riccati_tol", "residual_tol", "drift_tol"});
        cfg.tolerances.riccati_tol = get_number(t, "riccati_tol", cfg.tolerances.riccati_tol, origin, "tolerances.");
        cfg.tolerances.residual_tol =
            get_number(t, "residual_tol", cfg.tolerances.residual_tol, origin, "tolerances.");
        cfg.tolerances.drift_tol = get_number(t, "drift_tol", cfg.tolerances.drift_tol, origin, "tolerances.");
    }
    if (root.contains("sweep")) {
        const auto& s = root.at("sweep");
        allow_keys(s, origin, "sweep", {"parameter", "lo", "hi", "points", "mode", "probe_type"});
        cfg.sweep.parameter = get_string(s, "parameter", cfg.sweep.parameter, origin, "sweep.");
        static const char* kParams[] = {"h", "sigma", "sigma0", "theta", "gamma", "alpha"};
        if (std::none_of(std::begin(kParams), std::end(kParams),
                         [&](const char* p) { return cfg.sweep.parameter == p; })) {
            fail(origin, "sweep.parameter", "expected one of h, sigma, sigma0, theta, gamma, alpha");
        }
        cfg.sweep.lo = get_number(s, "lo", cfg.sweep.lo, origin, "sweep.");
        cfg.sweep.hi = get_number(s, "hi", cfg.sweep.hi, origin, "sweep.");
        cfg.sweep.points = get_count(s, "points", cfg.sweep.points, origin, "sweep.");
        const std::string mode = get_string(s, "mode", "individual", origin, "sweep.");
        if (mode == "individual") {
            cfg.sweep.mode = SweepMode::individual;
        } else if (mode == "population") {
            cfg.sweep.mode = SweepMode::population;
        } else {
            fail(origin, "sweep.mode", "expected individual or population");
        }
        cfg.sweep.probe_type = get_count(s, "probe_type", cfg.sweep.probe_type, origin, "sweep.");
    }
    revalidate(cfg);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace mfg
