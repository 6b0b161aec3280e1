#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "attrib/errors.hpp"
#include "attrib/harness.hpp"
#include "attrib/tabular.hpp"
#include "attrib/verify.hpp"

using namespace attrib;
using nlohmann::json;

namespace {

const SystemRegistry& registry() {
    static const SystemRegistry reg = builtin_registry();
    return reg;
}

json decomposition_config(double gamma) {
    return json{{"experiment", "decomp"},
                {"system", {{"name", "insufficiency"}, {"params", {{"gamma", gamma}}}}},
                {"target", "decomposition"},
                {"round", 1},
                {"prefix", {0}}};
}

const ReportRow& find_row(const RunResult& result, const std::string& quantity) {
    for (const auto& row : result.rows)
        if (row.quantity == quantity) return row;
    throw std::runtime_error("row not found: " + quantity);
}

}  // namespace

TEST_CASE("config parsing validates strictly") {
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::array()), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"target", "nope"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"target", "replay"}, {"bogus", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json(json{{"target", "replay"}, {"prefix", {0.5}}}),
        ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json(json{{"target", "replay"}, {"mode", "magic"}}),
        ConfigError);
    const auto cfg = ExperimentConfig::from_json(decomposition_config(2.0));
    CHECK(cfg.experiment == "decomp");
    CHECK(cfg.target == "decomposition");
    CHECK(cfg.prefix == History{0});
}

TEST_CASE("decomposition run on the sigmoid family") {
    const auto cfg = ExperimentConfig::from_json(decomposition_config(2.0));
    const RunResult result = run_experiment(cfg, registry());
    CHECK(result.all_pass);
    CHECK(find_row(result, "replay_term").value == 0.0);
    CHECK(find_row(result, "future_law_term").value == doctest::Approx(0.5).epsilon(1e-12));
    const auto& residual = find_row(result, "decomposition_residual");
    REQUIRE(residual.residual.has_value());
    CHECK(*residual.residual < 1e-10);
    CHECK(residual.status == "PASS");
    REQUIRE(residual.tolerance.has_value());
}

TEST_CASE("every residual column carries a tolerance") {
    for (const json& config :
         {decomposition_config(1.0),
          json{{"system", {{"name", "random-smooth"}, {"params", {{"seed", 3}}}}},
               {"target", "depth-L"},
               {"round", 1},
               {"prefix", {0}}},
          json{{"target", "certificate"}}}) {
        const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
        for (const auto& row : result.rows)
            if (row.residual.has_value()) CHECK(row.tolerance.has_value());
    }
}

TEST_CASE("depth-L run flags the interpolation endpoints") {
    json config{{"system", {{"name", "random-smooth"}, {"params", {{"seed", 11}, {"T", 4}}}}},
                {"target", "depth-L"},
                {"round", 2},
                {"prefix", {0, 0}}};
    const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
    CHECK(result.all_pass);
    CHECK(find_row(result, "endpoint_replay").status == "PASS");
    CHECK(find_row(result, "endpoint_interventional").status == "PASS");
    // One influence row and two bound rows per depth.
    int bound_rows = 0;
    for (const auto& row : result.rows)
        if (row.quantity.rfind("oscillation_bound", 0) == 0 ||
            row.quantity.rfind("uniform_bound", 0) == 0)
            ++bound_rows;
    CHECK(bound_rows == 2 * 3);
}

TEST_CASE("certificate run produces the JSON document") {
    json config{{"target", "certificate"}, {"gamma_a", 1.0}, {"gamma_b", 2.0},
                {"certificate_eps", 0.5}};
    const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
    CHECK(result.all_pass);
    REQUIRE(result.certificate.has_value());
    CHECK((*result.certificate)["oracles_equal"].get<bool>());
    CHECK(find_row(result, "influence_a").value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(find_row(result, "influence_b").value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mc run emits one row per epsilon") {
    json config{{"system", {{"name", "bandit"}, {"params", {{"q", 0.25}, {"mu0", 0.6},
                                                           {"mu1", 0.7},
                                                           {"eta", {0.3, 0.3}}}}}},
                {"target", "mc"},
                {"round", 1},
                {"prefix", {3}},
                {"epsilons", {-0.5, 0.0, 0.5}},
                {"samples", 2000},
                {"seed", 9}};
    const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
    REQUIRE(result.mc_rows.size() == 3);
    for (const auto& row : result.mc_rows) {
        CHECK(row.n == 2000);
        CHECK(row.seed == 9);
        CHECK(row.se > 0.0);
    }
    const std::string csv = mc_csv(result.mc_rows);
    CHECK(csv.rfind("epsilon,estimate,se,n,seed\n", 0) == 0);

    // The mc target needs a factorized system.
    json bad = config;
    bad["system"] = {{"name", "insufficiency"}};
    bad["prefix"] = {0};
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(bad), registry()), ConfigError);
}

TEST_CASE("separation run reproduces the sign-flip table") {
    json config{{"target", "separation"}, {"eta2_grid", {2.0}},
                {"mu0_grid", {0.90, 0.95, 0.99}}};
    const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
    REQUIRE(result.separation_rows.size() == 3);
    const std::string csv = separation_csv(result.separation_rows);
    CHECK(csv.rfind("mu0,eta2,replay,intervention,flip_witness\n", 0) == 0);
    CHECK(csv.find("(a=") != std::string::npos);
}

TEST_CASE("malformed prefixes are config errors") {
    json bad_round = decomposition_config(1.0);
    bad_round["round"] = 7;
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(bad_round), registry()),
                    ConfigError);

    json bad_prefix = decomposition_config(1.0);
    bad_prefix["prefix"] = {9};
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(bad_prefix), registry()),
                    ConfigError);

    json short_prefix = decomposition_config(1.0);
    short_prefix["prefix"] = json::array();
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(short_prefix), registry()),
                    ConfigError);
}

TEST_CASE("zero-probability prefixes are config errors") {
    json config{{"system", {{"name", "insufficiency-action-only"}}},
                {"target", "interventional"},
                {"round", 1},
                {"prefix", {1}}};  // index 1 never occurs at round 1
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(config), registry()), ConfigError);
}

TEST_CASE("tabular systems run through the harness") {
    json tab{{"state_grid", {0.0, 1.0}},
             {"initial_state", 0.0},
             {"rounds",
              json::array({json{{"cardinality", 2},
                                {"kernel", {{0.5, 0.5}, {0.25, 0.75}}},
                                {"next", {{0.0, 1.0}, {0.0, 1.0}}},
                                {"weight_slope", {{0.0, 0.5}, {0.0, 0.5}}}},
                           json{{"cardinality", 2},
                                {"kernel", {{0.5, 0.5}, {0.25, 0.75}}},
                                {"next", {{0.0, 1.0}, {0.0, 1.0}}}}})}};
    json config{{"system", {{"tabular", tab}}},
                {"target", "interventional"},
                {"round", 1},
                {"prefix", {1}}};
    const RunResult result = run_experiment(ExperimentConfig::from_json(config), registry());
    CHECK(result.all_pass);

    // Kernel rows that do not normalize are rejected.
    json bad = tab;
    bad["rounds"][0]["kernel"] = {{0.5, 0.4}, {0.25, 0.75}};
    CHECK_THROWS_AS(tabular_system(bad), ConfigError);
}

TEST_CASE("sweep grids expand and guard") {
    const auto params = parse_sweep(json::array(
        {json{{"param", "gamma"}, {"values", {1.0, 2.0}}},
         json{{"param", "epsilon"}, {"from", -0.5}, {"to", 0.5}, {"count", 3}}}));
    REQUIRE(params.size() == 2);
    CHECK(params[1].values == std::vector<double>{-0.5, 0.0, 0.5});

    json base = decomposition_config(1.0);
    const auto cfg = ExperimentConfig::from_json(base);
    const SweepResult sweep = run_sweep(cfg, params, registry());
    CHECK(sweep.points.size() == 6);
    CHECK(sweep.all_pass);
    const std::string csv = sweep_csv(sweep);
    CHECK(csv.rfind("gamma,epsilon,experiment", 0) == 0);

    CHECK_THROWS_AS(parse_sweep(json::array()), ConfigError);
    CHECK_THROWS_AS(parse_sweep(json::array({json{{"param", "a"}, {"values", {1}}},
                                             json{{"param", "b"}, {"values", {1}}},
                                             json{{"param", "c"}, {"values", {1}}}})),
                    ConfigError);
    SweepParameter big;
    big.name = "gamma";
    big.values.assign(200000, 1.0);
    CHECK_THROWS_AS(run_sweep(cfg, std::vector<SweepParameter>{big}, registry()), ConfigError);
}

TEST_CASE("sweeps are deterministic and worker-count invariant") {
    json base{{"target", "separation"}};
    const auto cfg = ExperimentConfig::from_json(base);
    std::vector<SweepParameter> params{{"mu0", {0.92, 0.95, 0.98}}, {"eta2", {1.5, 2.0}}};
    const std::string one = sweep_csv(run_sweep(cfg, params, registry(), 1.0, 1));
    const std::string four = sweep_csv(run_sweep(cfg, params, registry(), 1.0, 4));
    CHECK(one == four);
}

TEST_CASE("epsilon sweep of the interventional target matches the sigmoid closed form") {
    json base{{"system", {{"name", "insufficiency"}, {"params", {{"gamma", 2.0}}}}},
              {"target", "interventional"},
              {"round", 1},
              {"prefix", {0}}};
    const auto cfg = ExperimentConfig::from_json(base);
    std::vector<SweepParameter> params{{"epsilon", {-0.5, 0.25, 0.75}}};
    const SweepResult sweep = run_sweep(cfg, params, registry());
    for (const auto& [values, result] : sweep.points) {
        const double eps = values[0];
        const std::string name = "psi@" + format_double(eps);
        bool found = false;
        for (const auto& row : result.rows) {
            if (row.quantity != name) continue;
            found = true;
            CHECK(row.value ==
                  doctest::Approx(1.0 / (1.0 + std::exp(-2.0 * eps))).epsilon(1e-12));
        }
        CHECK(found);
    }
}

TEST_CASE("csv formatting round-trips doubles exactly") {
    for (double v : {1.0 / 3.0, 0.1, -2.5e-17, 3.141592653589793, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("verify suites pass at default tolerances") {
    for (const std::string& suite : verify_suite_names()) {
        if (suite == "all") continue;
        const auto rows = run_verify_suite(suite, 20240, 1.0, nullptr);
        CHECK_FALSE(rows.empty());
        for (const auto& row : rows) {
            INFO(suite << "/" << row.name);
            CHECK(row.pass);
        }
    }
    CHECK_THROWS_AS(run_verify_suite("bogus", 1, 1.0, nullptr), DomainError);
}
