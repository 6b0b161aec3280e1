#include "attrib/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "attrib/dp.hpp"
#include "attrib/enumeration.hpp"
#include "attrib/errors.hpp"
#include "attrib/gallery.hpp"
#include "attrib/tabular.hpp"

namespace attrib {

namespace {

const std::vector<std::string> kTargets{"replay",     "interventional", "depth-L",
                                        "decomposition", "separation",  "certificate",
                                        "mc"};

void check_config_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok) throw ConfigError("unknown config field: " + key);
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    check_config_keys(j, {"experiment", "system", "target", "round", "prefix", "epsilons",
                          "depths", "samples", "seed", "mode", "mu0_grid", "eta2_grid",
                          "gamma_a", "gamma_b", "certificate_eps", "sweep", "out"});

    ExperimentConfig cfg;
    if (!j.contains("target") || !j["target"].is_string())
        throw ConfigError("config requires a string 'target'");
    cfg.target = j["target"].get<std::string>();
    if (std::find(kTargets.begin(), kTargets.end(), cfg.target) == kTargets.end())
        throw ConfigError("unknown target: " + cfg.target);

    cfg.experiment = j.value("experiment", cfg.target);
    cfg.system = j.value("system", nlohmann::json());
    cfg.round = j.value("round", 1);
    if (j.contains("prefix")) {
        if (!j["prefix"].is_array()) throw ConfigError("'prefix' must be an array of indices");
        for (const auto& v : j["prefix"]) {
            if (!v.is_number_integer()) throw ConfigError("'prefix' entries must be integers");
            cfg.prefix.push_back(v.get<int>());
        }
    }
    if (j.contains("epsilons")) cfg.epsilons = j["epsilons"].get<std::vector<double>>();
    if (j.contains("depths")) cfg.depths = j["depths"].get<std::vector<int>>();
    cfg.samples = j.value("samples", std::size_t{10000});
    cfg.seed = j.value("seed", std::uint64_t{0});
    const std::string mode = j.value("mode", "analytic");
    if (mode == "analytic")
        cfg.mode = Mode::analytic;
    else if (mode == "fd" || mode == "finite-difference")
        cfg.mode = Mode::finite_difference;
    else
        throw ConfigError("mode must be 'analytic' or 'fd'");
    if (j.contains("mu0_grid")) cfg.mu0_grid = j["mu0_grid"].get<std::vector<double>>();
    if (j.contains("eta2_grid")) cfg.eta2_grid = j["eta2_grid"].get<std::vector<double>>();
    cfg.gamma_a = j.value("gamma_a", 1.0);
    cfg.gamma_b = j.value("gamma_b", 2.0);
    cfg.certificate_eps = j.value("certificate_eps", 0.5);
    return cfg;
}

namespace {

RegisteredSystem build_system(const ExperimentConfig& cfg, const SystemRegistry& registry) {
    if (cfg.system.is_null())
        throw ConfigError("target '" + cfg.target + "' requires a 'system' section");
    if (cfg.system.contains("tabular"))
        return RegisteredSystem{tabular_system(cfg.system["tabular"]), std::nullopt,
                                "inline tabular system"};
    if (!cfg.system.contains("name") || !cfg.system["name"].is_string())
        throw ConfigError("'system' requires a registry 'name' or an inline 'tabular' table");
    check_config_keys(cfg.system, {"name", "params"});
    return registry.build(cfg.system["name"].get<std::string>(),
                          cfg.system.value("params", nlohmann::json::object()));
}

void validate_prefix(const AdaptiveSystem& sys, const ExperimentConfig& cfg,
                     bool allow_full_log) {
    if (cfg.round < 1 || cfg.round > sys.horizon)
        throw ConfigError("round must lie in [1, horizon]");
    const bool conditional = cfg.prefix.size() == static_cast<std::size_t>(cfg.round);
    const bool full = cfg.prefix.size() == static_cast<std::size_t>(sys.horizon);
    if (!(conditional || (allow_full_log && full)))
        throw ConfigError("prefix length must equal the round" +
                          std::string(allow_full_log ? " (or the horizon for per-log replay)"
                                                     : ""));
    for (std::size_t i = 0; i < cfg.prefix.size(); ++i)
        if (cfg.prefix[i] < 0 || cfg.prefix[i] >= sys.cardinality[i])
            throw ConfigError("prefix index out of range at round " + std::to_string(i + 1));
    try {
        if (prefix_probability(sys, cfg.prefix) <= 0.0)
            throw ConfigError("prefix has zero baseline probability");
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

ReportRow value_row(const std::string& exp, const std::string& quantity,
                    const std::string& method, double value) {
    return ReportRow{exp, quantity, method, value, std::nullopt, std::nullopt, ""};
}

ReportRow checked_row(const std::string& exp, const std::string& quantity,
                      const std::string& method, double value, double residual,
                      double tolerance) {
    ReportRow row{exp, quantity, method, value, residual, tolerance, ""};
    row.status = residual <= tolerance ? "PASS" : "FAIL";
    return row;
}

std::string mode_tag(Mode mode) {
    return mode == Mode::analytic ? "analytic" : "finite-difference";
}

double fd_agreement_tolerance(double analytic, double scale) {
    return std::max(1e-7, 1e-5 * std::abs(analytic)) * scale;
}

void append(RunResult& out, ReportRow row) {
    if (row.status == "FAIL") out.all_pass = false;
    out.rows.push_back(std::move(row));
}

RunResult run_replay(const ExperimentConfig& cfg, const AdaptiveSystem& sys, double scale) {
    RunResult out;
    const bool per_log = cfg.prefix.size() == static_cast<std::size_t>(sys.horizon) &&
                         static_cast<std::size_t>(cfg.round) != cfg.prefix.size();
    const double analytic = per_log ? replay_influence(sys, cfg.round, cfg.prefix)
                                    : conditional_expected_replay(sys, cfg.round, cfg.prefix);
    const double fd = per_log
                          ? replay_influence(sys, cfg.round, cfg.prefix, Mode::finite_difference)
                          : conditional_expected_replay(sys, cfg.round, cfg.prefix,
                                                        Mode::finite_difference);
    const char* name = per_log ? "replay_influence" : "conditional_expected_replay";
    append(out, value_row(cfg.experiment, name, "analytic", analytic));
    append(out, value_row(cfg.experiment, name, "finite-difference", fd));
    append(out, checked_row(cfg.experiment, std::string(name) + "_agreement", "cross", analytic,
                            std::abs(analytic - fd), fd_agreement_tolerance(analytic, scale)));
    return out;
}

RunResult run_interventional(const ExperimentConfig& cfg, const AdaptiveSystem& sys,
                             double scale) {
    RunResult out;
    const double analytic = interventional_influence(sys, cfg.round, cfg.prefix);
    const double fd =
        interventional_influence(sys, cfg.round, cfg.prefix, Mode::finite_difference);
    append(out, value_row(cfg.experiment, "interventional_influence", "analytic", analytic));
    append(out, value_row(cfg.experiment, "interventional_influence", "finite-difference", fd));
    append(out, checked_row(cfg.experiment, "interventional_influence_agreement", "cross",
                            analytic, std::abs(analytic - fd),
                            fd_agreement_tolerance(analytic, scale)));
    const double psi0 = psi(sys, cfg.round, 0.0, cfg.prefix);
    append(out, value_row(cfg.experiment, "psi@0", "enumeration", psi0));
    for (double eps : cfg.epsilons) {
        const double value = psi(sys, cfg.round, eps, cfg.prefix);
        append(out, value_row(cfg.experiment, "psi@" + format_double(eps), "enumeration", value));
        append(out, value_row(cfg.experiment, "delta_int@" + format_double(eps), "enumeration",
                              value - psi0));
    }
    return out;
}

RunResult run_decomposition(const ExperimentConfig& cfg, const AdaptiveSystem& sys,
                            double scale) {
    RunResult out;
    const Decomposition d = structural_decomposition(sys, cfg.round, cfg.prefix, cfg.mode);
    const std::string tag = mode_tag(cfg.mode);
    append(out, value_row(cfg.experiment, "replay_term", tag, d.replay_term));
    append(out, value_row(cfg.experiment, "future_law_term", tag, d.future_law_term));
    append(out, checked_row(cfg.experiment, "future_law_term_centered", tag,
                            d.future_law_term_centered,
                            std::abs(d.future_law_term - d.future_law_term_centered),
                            1e-10 * scale));
    append(out, value_row(cfg.experiment, "interventional_influence", tag, d.total));
    const double tol = (cfg.mode == Mode::analytic ? 1e-8 : 1e-6) * scale;
    append(out, checked_row(cfg.experiment, "decomposition_residual", tag, d.residual,
                            std::abs(d.residual), tol));
    const double dotq_sum = dot_q(sys, cfg.round, cfg.prefix, cfg.mode).sum();
    append(out, checked_row(cfg.experiment, "dotq_sum", tag, dotq_sum, std::abs(dotq_sum),
                            1e-10 * scale));
    return out;
}

RunResult run_depth(const ExperimentConfig& cfg, const AdaptiveSystem& sys, double scale) {
    RunResult out;
    const int top = sys.horizon - cfg.round;
    std::vector<int> depths = cfg.depths;
    if (depths.empty())
        for (int L = 0; L <= top; ++L) depths.push_back(L);
    for (int L : depths)
        if (L < 0 || L > top) throw ConfigError("depth out of range: " + std::to_string(L));

    const double cer = conditional_expected_replay(sys, cfg.round, cfg.prefix);
    const double full = influence_dp(sys, cfg.round, cfg.prefix);
    for (int L : depths) {
        const std::string suffix = "@L=" + std::to_string(L);
        const double analytic = depth_L_influence(sys, cfg.round, cfg.prefix, L);
        const double fd =
            depth_L_influence(sys, cfg.round, cfg.prefix, L, Mode::finite_difference);
        append(out, value_row(cfg.experiment, "depth_influence" + suffix, "analytic", analytic));
        append(out, checked_row(cfg.experiment, "depth_influence_fd" + suffix,
                                "finite-difference", fd, std::abs(analytic - fd), 1e-6 * scale));
        const TruncationBounds b = truncation_bounds(sys, cfg.round, cfg.prefix, L);
        append(out, value_row(cfg.experiment, "exact_tail" + suffix, "analytic", b.exact_tail));
        append(out, checked_row(cfg.experiment, "oscillation_bound" + suffix,
                                b.tv_probed ? "probed" : "analytic", b.oscillation_bound,
                                std::max(0.0, std::abs(b.exact_tail) - b.oscillation_bound),
                                1e-14 * scale));
        append(out, checked_row(cfg.experiment, "uniform_bound" + suffix, "analytic",
                                b.uniform_bound,
                                std::max(0.0, b.oscillation_bound - b.uniform_bound),
                                1e-14 * scale));
        if (L == 0)
            append(out, checked_row(cfg.experiment, "endpoint_replay", "analytic", analytic,
                                    std::abs(analytic - cer), 1e-8 * scale));
        if (L == top)
            append(out, checked_row(cfg.experiment, "endpoint_interventional", "analytic",
                                    analytic, std::abs(analytic - full), 1e-8 * scale));
    }
    return out;
}

RunResult run_separation(const ExperimentConfig& cfg) {
    RunResult out;
    const auto mu0 = cfg.mu0_grid.empty() ? default_separation_mu0_grid() : cfg.mu0_grid;
    const auto eta2 = cfg.eta2_grid.empty() ? default_separation_eta2_grid() : cfg.eta2_grid;
    for (double e : eta2) {
        const auto rows = separation_search(e, mu0);
        for (const auto& row : rows) {
            out.separation_rows.push_back(row);
            const std::string suffix =
                "@mu0=" + format_double(row.mu0) + ",eta2=" + format_double(row.eta2);
            append(out, value_row(cfg.experiment, "replay" + suffix, "closed-form",
                                  row.replay_closed));
            append(out, value_row(cfg.experiment, "interventional" + suffix, "closed-form",
                                  row.interventional_closed));
            append(out, value_row(cfg.experiment, "flip_witness_z" + suffix, "enumeration",
                                  row.witness ? row.witness->z : -1));
        }
    }
    return out;
}

RunResult run_certificate(const ExperimentConfig& cfg, double scale) {
    RunResult out;
    const InsufficiencyCertificate cert =
        insufficiency_certificate(cfg.gamma_a, cfg.gamma_b, cfg.certificate_eps);
    out.certificate = certificate_to_json(cert);
    append(out, checked_row(cfg.experiment, "oracle_deviation", "table", cert.oracle_deviation,
                            cert.oracle_deviation, 0.0));
    const double gap = std::abs(cert.psi_a - cert.psi_b);
    append(out, checked_row(cfg.experiment, "psi_gap", "enumeration", gap,
                            std::max(0.0, 1e-6 - gap), 0.0));
    append(out, checked_row(cfg.experiment, "influence_a", "analytic", cert.influence_a,
                            std::abs(cert.influence_a - cfg.gamma_a / 4.0), 1e-12 * scale));
    append(out, checked_row(cfg.experiment, "influence_b", "analytic", cert.influence_b,
                            std::abs(cert.influence_b - cfg.gamma_b / 4.0), 1e-12 * scale));
    return out;
}

RunResult run_mc(const ExperimentConfig& cfg, const RegisteredSystem& built) {
    RunResult out;
    if (!built.action_only)
        throw ConfigError("mc target requires a factorized (action-only) system");
    if (cfg.samples == 0) throw ConfigError("mc target requires samples >= 1");
    std::vector<double> eps = cfg.epsilons;
    if (eps.empty()) eps.push_back(0.0);
    for (double e : eps) {
        const McEstimate est =
            mc_psi(*built.action_only, cfg.round, e, cfg.prefix, cfg.samples, cfg.seed);
        out.mc_rows.push_back({e, est.estimate, est.se, est.n, est.seed});
    }
    return out;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const SystemRegistry& registry,
                         double tolerance_scale) {
    if (cfg.target == "certificate") return run_certificate(cfg, tolerance_scale);
    if (cfg.target == "separation") return run_separation(cfg);

    const RegisteredSystem built = build_system(cfg, registry);
    const AdaptiveSystem& sys = built.system;
    validate_prefix(sys, cfg, cfg.target == "replay");

    try {
        if (cfg.target == "replay") return run_replay(cfg, sys, tolerance_scale);
        if (cfg.target == "interventional") return run_interventional(cfg, sys, tolerance_scale);
        if (cfg.target == "decomposition") return run_decomposition(cfg, sys, tolerance_scale);
        if (cfg.target == "depth-L") return run_depth(cfg, sys, tolerance_scale);
        if (cfg.target == "mc") return run_mc(cfg, built);
    } catch (const ConditioningError& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown target: " + cfg.target);
}

std::vector<SweepParameter> parse_sweep(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("'sweep' must be an array of parameters");
    std::vector<SweepParameter> params;
    for (const auto& entry : j) {
        check_config_keys(entry, {"param", "values", "from", "to", "count"});
        SweepParameter p;
        if (!entry.contains("param") || !entry["param"].is_string())
            throw ConfigError("sweep entries require a string 'param'");
        p.name = entry["param"].get<std::string>();
        if (entry.contains("values")) {
            p.values = entry["values"].get<std::vector<double>>();
        } else {
            if (!entry.contains("from") || !entry.contains("to") || !entry.contains("count"))
                throw ConfigError("sweep entries need 'values' or 'from'/'to'/'count'");
            const double from = entry["from"].get<double>();
            const double to = entry["to"].get<double>();
            const int count = entry["count"].get<int>();
            if (count < 1) throw ConfigError("sweep 'count' must be positive");
            for (int i = 0; i < count; ++i)
                p.values.push_back(count == 1 ? from
                                              : from + (to - from) * i / (count - 1.0));
        }
        if (p.values.empty()) throw ConfigError("sweep parameter has no values");
        params.push_back(std::move(p));
    }
    if (params.empty() || params.size() > 2)
        throw ConfigError("sweep supports one or two parameters");
    return params;
}

namespace {

ExperimentConfig apply_override(ExperimentConfig cfg, const std::string& name, double value) {
    if (name == "epsilon") {
        cfg.epsilons = {value};
        cfg.certificate_eps = value;
    } else if (name == "L") {
        cfg.depths = {static_cast<int>(value)};
    } else if (name == "round") {
        cfg.round = static_cast<int>(value);
    } else if (name == "mu0") {
        cfg.mu0_grid = {value};
    } else if (name == "eta2") {
        cfg.eta2_grid = {value};
    } else {
        if (cfg.system.is_null()) cfg.system = nlohmann::json::object();
        cfg.system["params"][name] = value;
    }
    return cfg;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& base, std::span<const SweepParameter> params,
                      const SystemRegistry& registry, double tolerance_scale, int workers) {
    std::size_t total = 1;
    for (const auto& p : params) total *= p.values.size();
    if (total > 100000) throw ConfigError("sweep grid exceeds 1e5 points");

    SweepResult out;
    for (const auto& p : params) out.param_names.push_back(p.name);
    out.points.resize(total);

    auto point_values = [&](std::size_t index) {
        std::vector<double> values;
        std::size_t rest = index;
        for (std::size_t i = params.size(); i-- > 0;) {
            values.insert(values.begin(), params[i].values[rest % params[i].values.size()]);
            rest /= params[i].values.size();
        }
        return values;
    };

    auto evaluate = [&](std::size_t index) {
        const auto values = point_values(index);
        ExperimentConfig cfg = base;
        for (std::size_t i = 0; i < params.size(); ++i)
            cfg = apply_override(std::move(cfg), params[i].name, values[i]);
        out.points[index] = {values, run_experiment(cfg, registry, tolerance_scale)};
    };

    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(total)));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < total; ++i) evaluate(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = static_cast<std::size_t>(w); i < total;
                         i += static_cast<std::size_t>(n_workers))
                        evaluate(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    for (const auto& [values, result] : out.points) out.all_pass &= result.all_pass;
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_report_row(std::string& out, const ReportRow& row,
                       const std::string& point_prefix = "") {
    out += point_prefix;
    out += csv_escape(row.experiment) + "," + csv_escape(row.quantity) + "," +
           csv_escape(row.method) + "," + format_double(row.value) + ",";
    if (row.residual) out += format_double(*row.residual);
    out += ",";
    if (row.tolerance) out += format_double(*row.tolerance);
    out += "," + row.status + "\n";
}

}  // namespace

std::string report_csv(std::span<const ReportRow> rows) {
    std::string out = "experiment,quantity,method,value,residual,tolerance,status\n";
    for (const auto& row : rows) append_report_row(out, row);
    return out;
}

std::string mc_csv(std::span<const McRow> rows) {
    std::string out = "epsilon,estimate,se,n,seed\n";
    for (const auto& row : rows) {
        out += format_double(row.epsilon) + "," + format_double(row.estimate) + "," +
               format_double(row.se) + "," + std::to_string(row.n) + "," +
               std::to_string(row.seed) + "\n";
    }
    return out;
}

std::string separation_csv(std::span<const SeparationResult> rows) {
    std::string out = "mu0,eta2,replay,intervention,flip_witness\n";
    for (const auto& row : rows) {
        std::string witness;
        if (row.witness)
            witness = "(a=" + std::to_string(row.witness->action) +
                      ",r=" + std::to_string(row.witness->reward) + ")";
        out += format_double(row.mu0) + "," + format_double(row.eta2) + "," +
               format_double(row.replay_closed) + "," +
               format_double(row.interventional_closed) + "," + csv_escape(witness) + "\n";
    }
    return out;
}

std::string sweep_csv(const SweepResult& sweep) {
    std::string out;
    for (const auto& name : sweep.param_names) out += csv_escape(name) + ",";
    out += "experiment,quantity,method,value,residual,tolerance,status\n";
    for (const auto& [values, result] : sweep.points) {
        std::string point_prefix;
        for (double v : values) point_prefix += format_double(v) + ",";
        for (const auto& row : result.rows) append_report_row(out, row, point_prefix);
        for (const auto& row : result.mc_rows) {
            out += point_prefix + "mc,estimate@eps=" + format_double(row.epsilon) +
                   ",monte-carlo," + format_double(row.estimate) + "," + format_double(row.se) +
                   ",,\n";
        }
    }
    return out;
}

}  // namespace attrib
