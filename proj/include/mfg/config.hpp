#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfg/error.hpp"
#include "mfg/montecarlo.hpp"
#include "mfg/population.hpp"

namespace mfg {

/// Malformed or invalid scenario file. The message carries the key path and,
/// for syntax errors, the line and column.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A market parameter as written in the file: a scalar broadcast over the grid
/// or one value per knot.
struct CurveSpec {
    bool scalar = true;
    double value = 0.0;
    std::vector<double> values;

    ParamCurve build(const TimeGrid& grid) const;
};

struct TypeSpec {
    std::string name;
    double weight = 1.0;
    double x0 = 1.0;
    double gamma = 0.5;
    double theta = 0.0;
    double alpha = 1.0;
    CurveSpec h;
    CurveSpec sigma;
    CurveSpec sigma0;
};

struct McSettings {
    std::size_t n_samples = 100000;
    std::size_t n_agents = 100000;
    std::size_t n_w0_paths = 3;
    std::uint64_t seed = 20240601;
    bool stratified = false;
    std::size_t probe_type = 0;
};

struct Tolerances {
    double riccati_tol = 1e-6;
    double residual_tol = 1e-4;
    double drift_tol = 1e-10;
};

enum class SweepMode { individual, population };

struct SweepSettings {
    std::string parameter = "sigma0";  // h | sigma | sigma0 | theta | gamma | alpha
    double lo = 0.01;
    double hi = 2.0;
    std::size_t points = 200;
    SweepMode mode = SweepMode::individual;
    std::size_t probe_type = 0;
};

struct ScenarioConfig {
    double horizon = 1.0;
    std::size_t n_steps = 2000;
    std::vector<TypeSpec> types;
    double gamma_lb = kDefaultGammaLb;
    double sigma_lb = kDefaultSigmaLb;
    StrategyBounds bounds;
    McSettings mc;
    Tolerances tolerances;
    SweepSettings sweep;
    std::string output = "out";
    /// Source text, hashed into the run manifest.
    std::string source;

    /// Builds the population on a fresh grid; arrays must have n_steps + 1 entries.
    Population population() const;
};

/// Parses and validates. Syntax errors, wrong types, unknown keys and ragged
/// curves raise ConfigError; standing-assumption violations raise ConfigError
/// naming each offending type and rule.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Re-validates after command-line overrides (steps, samples, seed).
void revalidate(const ScenarioConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace mfg
