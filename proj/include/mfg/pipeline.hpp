#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfg/closedform.hpp"
#include "mfg/config.hpp"
#include "mfg/montecarlo.hpp"

namespace mfg {

enum class Command { solve, verify, simulate, deviate, sweep };

/// Throws ConfigError for an unknown name.
Command parse_command(const std::string& name);
std::string command_name(Command c);

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string relation = "<=";  // measured <relation> tolerance must hold
    bool pass = false;
};

struct RunOptions {
    /// Overrides the config's output directory when non-empty.
    std::filesystem::path out_dir;
    /// verify: re-read this equilibrium.csv instead of re-solving.
    std::filesystem::path solution;
    ExecPolicy policy = ExecPolicy::parallel;
};

struct RunResult {
    Command command = Command::solve;
    std::vector<Check> checks;
    std::vector<std::string> files;
    std::string error;

    bool ok() const;
    /// 0 when every check passes, 1 otherwise.
    int exit_code() const { return ok() ? 0 : 1; }
};

/// Runs one pipeline, writes its CSV artifacts and manifest.json into the
/// output directory, and returns the check results. Library errors raised
/// while running are recorded in `error` rather than thrown.
RunResult run(Command command, const ScenarioConfig& config, const RunOptions& options = {});

/// One line per check, then the overall verdict.
std::string render_summary(const RunResult& result);

struct SweepRow {
    double value = 0.0;
    double pi_star = 0.0;
    double c_star = 0.0;
    bool flagged = false;  // perturbed population outside the standing assumptions
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// sigma0 thresholds of the probe type at t = 0 under the base aggregates.
    Thresholds thresholds;
};

/// pi* and c* of the probe type at t = 0 as one parameter moves over
/// [lo, hi]. Individual mode sets the probe's parameter and holds the
/// population aggregates at their base values. Population mode shifts every
/// other type's parameter by (value - probe's base value), keeps the probe
/// unchanged and recomputes the aggregates.
SweepResult sweep_sensitivity(const ScenarioConfig& config, const SweepSettings& settings);

/// Location of the first sign change of the finite-difference slope of
/// pi* over unflagged rows: the row value shared by the two slope cells.
std::optional<double> slope_sign_change(const std::vector<SweepRow>& rows);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);
/// %.17g, which round-trips every double.
std::string csv_number(double v);

/// Columns t,type,pi_star,c_star,y_tilde,phi,psi,z0; type is the index.
void write_equilibrium_csv(const std::filesystem::path& path, const EquilibriumSolution& sol);
/// Solves the population for the curves the file does not carry (A, B, D),
/// then overlays the file's columns. StructuralError if the file does not
/// match the population's grid and type count.
EquilibriumSolution read_equilibrium_csv(const std::filesystem::path& path, const Population& pop);

}  // namespace mfg
