#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "attrib/errors.hpp"
#include "attrib/harness.hpp"
#include "attrib/registry.hpp"
#include "attrib/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertionFailure = 2;
constexpr int kExitConfigError = 3;
constexpr int kExitNumericError = 4;

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw attrib::ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw attrib::ConfigError("config parse error at line " + std::to_string(line) + ": " +
                                  e.what());
    }
}

// All outputs are staged in memory and written through a temp-file rename, so
// a failed run never leaves a partial report behind.
void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw attrib::ConfigError("cannot write output file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

int default_workers() {
    if (const char* env = std::getenv("ATTRIB_WORKERS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;  // -1: keep the config's seed
    int workers = 0;         // 0: env or 1
    double tolerance_scale = 1.0;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config) {
    if (needs_config)
        cmd->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", opt.out_dir, "output directory (default: config 'out' or '.')");
    cmd->add_option("--seed", opt.seed, "override the config seed");
    cmd->add_option("--workers", opt.workers,
                    "parallel workers (default: ATTRIB_WORKERS or 1)");
    cmd->add_option("--tolerance-scale", opt.tolerance_scale,
                    "multiply every assertion tolerance");
}

struct LoadedExperiment {
    attrib::ExperimentConfig cfg;
    json raw;
    fs::path out_dir;
};

LoadedExperiment load_experiment(const CommonOptions& opt) {
    LoadedExperiment loaded;
    loaded.raw = load_config(opt.config_path);
    loaded.cfg = attrib::ExperimentConfig::from_json(loaded.raw);
    if (opt.seed >= 0) loaded.cfg.seed = static_cast<std::uint64_t>(opt.seed);
    loaded.out_dir = !opt.out_dir.empty() ? fs::path(opt.out_dir)
                                          : fs::path(loaded.raw.value("out", "."));
    return loaded;
}

int cmd_run(const CommonOptions& opt) {
    const LoadedExperiment loaded = load_experiment(opt);
    if (loaded.raw.contains("sweep"))
        throw attrib::ConfigError("config has a 'sweep' section; use the sweep subcommand");

    const attrib::SystemRegistry registry = attrib::builtin_registry();
    const attrib::RunResult result =
        attrib::run_experiment(loaded.cfg, registry, opt.tolerance_scale);

    std::vector<std::pair<fs::path, std::string>> outputs;
    const std::string base = loaded.cfg.experiment;
    if (!result.mc_rows.empty())
        outputs.emplace_back(loaded.out_dir / (base + ".csv"), attrib::mc_csv(result.mc_rows));
    else if (!result.separation_rows.empty() && result.rows.empty())
        outputs.emplace_back(loaded.out_dir / (base + ".csv"),
                             attrib::separation_csv(result.separation_rows));
    else
        outputs.emplace_back(loaded.out_dir / (base + ".csv"), attrib::report_csv(result.rows));
    if (!result.separation_rows.empty() && !result.rows.empty())
        outputs.emplace_back(loaded.out_dir / (base + "_table.csv"),
                             attrib::separation_csv(result.separation_rows));
    if (result.certificate)
        outputs.emplace_back(loaded.out_dir / (base + ".json"), result.certificate->dump(2) + "\n");

    for (const auto& [path, content] : outputs) write_atomic(path, content);
    for (const auto& [path, content] : outputs)
        std::cout << "wrote " << path.string() << "\n";

    if (!result.all_pass) {
        std::cerr << "assertion failures present in " << base << ".csv\n";
        return kExitAssertionFailure;
    }
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opt) {
    const LoadedExperiment loaded = load_experiment(opt);
    if (!loaded.raw.contains("sweep"))
        throw attrib::ConfigError("sweep subcommand requires a 'sweep' section");
    const auto params = attrib::parse_sweep(loaded.raw["sweep"]);

    const attrib::SystemRegistry registry = attrib::builtin_registry();
    const int workers = opt.workers > 0 ? opt.workers : default_workers();
    const attrib::SweepResult result =
        attrib::run_sweep(loaded.cfg, params, registry, opt.tolerance_scale, workers);

    const fs::path path = loaded.out_dir / (loaded.cfg.experiment + "_sweep.csv");
    write_atomic(path, attrib::sweep_csv(result));
    std::cout << "wrote " << path.string() << "\n";
    return result.all_pass ? kExitOk : kExitAssertionFailure;
}

int cmd_verify(const std::string& suite, const CommonOptions& opt) {
    std::uint64_t seed = opt.seed >= 0 ? static_cast<std::uint64_t>(opt.seed) : 20240u;
    const auto rows = attrib::run_verify_suite(suite, seed, opt.tolerance_scale, &std::cout);
    bool pass = true;
    for (const auto& row : rows) {
        std::printf("[%s] %-36s residual %-12.3e tol %-12.3e %s\n", row.suite.c_str(),
                    row.name.c_str(), row.residual, row.tolerance,
                    row.pass ? "PASS" : "FAIL");
        pass &= row.pass;
    }
    std::printf("%zu invariants checked: %s\n", rows.size(), pass ? "all pass" : "FAILURES");
    return pass ? kExitOk : kExitAssertionFailure;
}

int cmd_list() {
    const attrib::SystemRegistry registry = attrib::builtin_registry();
    for (const auto& entry : registry.entries())
        std::printf("%-28s params: %s\n", entry.name.c_str(), entry.params_doc.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attrib: replay and interventional influence for finite-horizon adaptive "
                 "learners"};
    app.require_subcommand(1);

    CommonOptions run_opt, sweep_opt, verify_opt;
    std::string suite = "all";

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    add_common(run, run_opt, true);

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep from a config file");
    add_common(sweep, sweep_opt, true);

    CLI::App* verify = app.add_subcommand("verify", "run a built-in invariant suite");
    verify->add_option("suite", suite, "core | dp | action-only | bandit | gallery | all");
    add_common(verify, verify_opt, false);

    CLI::App* list = app.add_subcommand("list", "list registered systems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
        if (verify->parsed()) return cmd_verify(suite, verify_opt);
        if (list->parsed()) return cmd_list();
    } catch (const attrib::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const attrib::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const attrib::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumericError;
    } catch (const attrib::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericError;
    }
    return kExitConfigError;
}
