#pragma once

#include <json.hpp>
#include <optional>

#include "attrib/bandit.hpp"
#include "attrib/enumeration.hpp"
#include "attrib/registry.hpp"

namespace attrib {

// A parsed experiment description. Strictly validated: unknown keys, bad
// target names, malformed prefixes, and zero-probability prefixes are all
// ConfigError.
struct ExperimentConfig {
    std::string experiment;  // report id; defaults to the target name
    nlohmann::json system;   // {"name", "params"} or {"tabular": {...}}
    std::string target;      // replay | interventional | depth-L | decomposition |
                             // separation | certificate | mc
    int round = 1;
    History prefix;
    std::vector<double> epsilons;
    std::vector<int> depths;           // depth-L target; empty = all depths
    std::size_t samples = 10000;       // mc target
    std::uint64_t seed = 0;
    Mode mode = Mode::analytic;

    std::vector<double> mu0_grid;      // separation target
    std::vector<double> eta2_grid;
    double gamma_a = 1.0, gamma_b = 2.0, certificate_eps = 0.5;  // certificate target

    static ExperimentConfig from_json(const nlohmann::json& j);
};

// One line of the generic report CSV. Residual columns always carry their
// tolerance; status is PASS/FAIL for asserted identities and empty for plain
// values.
struct ReportRow {
    std::string experiment;
    std::string quantity;
    std::string method;
    double value = 0.0;
    std::optional<double> residual;
    std::optional<double> tolerance;
    std::string status;
};

struct McRow {
    double epsilon = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<ReportRow> rows;
    std::vector<McRow> mc_rows;                     // mc target
    std::vector<SeparationResult> separation_rows;  // separation target
    std::optional<nlohmann::json> certificate;      // certificate target
    bool all_pass = true;
};

// Executes one experiment. tolerance_scale multiplies every assertion
// tolerance. Throws ConfigError / NumericError; never writes files.
RunResult run_experiment(const ExperimentConfig& cfg, const SystemRegistry& registry,
                         double tolerance_scale = 1.0);

// Sweep: a Cartesian grid over at most two parameters. A parameter names
// either a system parameter (overrides system.params[name]) or one of
// "epsilon", "L", "round", "mu0", "eta2". Refuses grids above 1e5 points.
struct SweepParameter {
    std::string name;
    std::vector<double> values;
};

struct SweepResult {
    std::vector<std::string> param_names;
    // One entry per grid point: the parameter values and the point's rows.
    std::vector<std::pair<std::vector<double>, RunResult>> points;
    bool all_pass = true;
};

std::vector<SweepParameter> parse_sweep(const nlohmann::json& j);

SweepResult run_sweep(const ExperimentConfig& base, std::span<const SweepParameter> params,
                      const SystemRegistry& registry, double tolerance_scale = 1.0,
                      int workers = 1);

// CSV rendering: 17 significant digits, '.' decimal separator, stable order.
std::string format_double(double v);
std::string report_csv(std::span<const ReportRow> rows);
std::string mc_csv(std::span<const McRow> rows);
std::string separation_csv(std::span<const SeparationResult> rows);
std::string sweep_csv(const SweepResult& sweep);

}  // namespace attrib
