#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

// Runs the installed CLI binary (path via ATTRIB_CLI) and captures stdout+stderr.
CommandResult run_cli(const std::string& args) {
    const char* cli = std::getenv("ATTRIB_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CommandResult result;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
        result.output.append(buf.data(), n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "attrib-cli-tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const std::string& name, const std::string& content) {
    const fs::path path = scratch_dir() / name;
    std::ofstream out(path, std::ios::trunc);
    out << content;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int count_files(const fs::path& dir) {
    int n = 0;
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir)) {
            (void)entry;
            ++n;
        }
    return n;
}

}  // namespace

TEST_CASE("decomposition run writes the expected CSV and exits cleanly") {
    const fs::path out = scratch_dir() / "decomp-out";
    fs::remove_all(out);
    const auto config = write_config("decomp.json", R"({
        "experiment": "insufficiency-decomp",
        "system": {"name": "insufficiency", "params": {"gamma": 2.0}},
        "target": "decomposition",
        "round": 1,
        "prefix": [0]
    })");
    const auto result = run_cli("run --config " + config.string() + " --out " + out.string());
    CHECK(result.exit_code == 0);
    const std::string csv = slurp(out / "insufficiency-decomp.csv");
    CHECK(csv.rfind("experiment,quantity,method,value,residual,tolerance,status\n", 0) == 0);
    CHECK(csv.find("replay_term,analytic,0,") != std::string::npos);
    CHECK(csv.find("future_law_term,analytic,0.5") != std::string::npos);
    CHECK(csv.find("FAIL") == std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const fs::path out_a = scratch_dir() / "det-a";
    const fs::path out_b = scratch_dir() / "det-b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    const auto config = write_config("mc.json", R"({
        "experiment": "mc-bandit",
        "system": {"name": "bandit",
                   "params": {"q": 0.25, "mu0": 0.6, "mu1": 0.7, "eta": [0.3, 0.3]}},
        "target": "mc",
        "round": 1,
        "prefix": [3],
        "epsilons": [-0.5, 0.5],
        "samples": 5000,
        "seed": 11
    })");
    CHECK(run_cli("run --config " + config.string() + " --out " + out_a.string()).exit_code == 0);
    CHECK(run_cli("run --config " + config.string() + " --out " + out_b.string()).exit_code == 0);
    CHECK(slurp(out_a / "mc-bandit.csv") == slurp(out_b / "mc-bandit.csv"));
    CHECK(slurp(out_a / "mc-bandit.csv").rfind("epsilon,estimate,se,n,seed\n", 0) == 0);
}

TEST_CASE("malformed prefix exits with the config code and writes nothing") {
    const fs::path out = scratch_dir() / "bad-out";
    fs::remove_all(out);
    const auto config = write_config("bad-prefix.json", R"({
        "system": {"name": "insufficiency"},
        "target": "decomposition",
        "round": 1,
        "prefix": [5]
    })");
    const auto result = run_cli("run --config " + config.string() + " --out " + out.string());
    CHECK(result.exit_code == 3);
    CHECK(count_files(out) == 0);
}

TEST_CASE("json syntax errors report the line and exit with the config code") {
    const auto config = write_config("broken.json", "{\n  \"target\": \"replay\",\n  oops\n}\n");
    const auto result = run_cli("run --config " + config.string());
    CHECK(result.exit_code == 3);
    CHECK(result.output.find("line 3") != std::string::npos);
}

TEST_CASE("unknown subcommands and missing configs are config errors") {
    CHECK(run_cli("frobnicate").exit_code == 3);
    CHECK(run_cli("run --config /nonexistent/missing.json").exit_code == 3);
}

TEST_CASE("certificate run writes the JSON document") {
    const fs::path out = scratch_dir() / "cert-out";
    fs::remove_all(out);
    const auto config = write_config("cert.json", R"({
        "experiment": "cert-1-2",
        "target": "certificate",
        "gamma_a": 1.0,
        "gamma_b": 2.0,
        "certificate_eps": 0.5
    })");
    const auto result = run_cli("run --config " + config.string() + " --out " + out.string());
    CHECK(result.exit_code == 0);
    const std::string doc = slurp(out / "cert-1-2.json");
    CHECK(doc.find("\"oracles_equal\": true") != std::string::npos);
    CHECK(doc.find("\"oracle_deviation\": 0.0") != std::string::npos);
}

TEST_CASE("separation run emits the sign-flip table") {
    const fs::path out = scratch_dir() / "sep-out";
    fs::remove_all(out);
    const auto config = write_config("sep.json", R"({
        "experiment": "separation-eta2",
        "target": "separation",
        "eta2_grid": [2.0],
        "mu0_grid": [0.95]
    })");
    const auto result = run_cli("run --config " + config.string() + " --out " + out.string());
    CHECK(result.exit_code == 0);
    const std::string table = slurp(out / "separation-eta2_table.csv");
    CHECK(table.rfind("mu0,eta2,replay,intervention,flip_witness\n", 0) == 0);
    CHECK(table.find("(a=") != std::string::npos);
}

TEST_CASE("sweep subcommand writes a long-form CSV and honors workers") {
    const fs::path out = scratch_dir() / "sweep-out";
    fs::remove_all(out);
    const auto config = write_config("sweep.json", R"({
        "experiment": "eps-sweep",
        "system": {"name": "insufficiency", "params": {"gamma": 1.0}},
        "target": "interventional",
        "round": 1,
        "prefix": [0],
        "sweep": [{"param": "epsilon", "from": -0.5, "to": 0.5, "count": 5}]
    })");
    const auto one =
        run_cli("sweep --config " + config.string() + " --out " + out.string() + " --workers 1");
    CHECK(one.exit_code == 0);
    const std::string csv1 = slurp(out / "eps-sweep_sweep.csv");
    const auto four =
        run_cli("sweep --config " + config.string() + " --out " + out.string() + " --workers 4");
    CHECK(four.exit_code == 0);
    CHECK(slurp(out / "eps-sweep_sweep.csv") == csv1);
    CHECK(csv1.rfind("epsilon,experiment,", 0) == 0);

    // run subcommand refuses sweep configs.
    CHECK(run_cli("run --config " + config.string()).exit_code == 3);
}

TEST_CASE("verify subcommand reports per-invariant residual maxima") {
    const auto result = run_cli("verify bandit --seed 5");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("closed-form-vs-enumeration") != std::string::npos);
    CHECK(result.output.find("PASS") != std::string::npos);
    CHECK(result.output.find("FAIL") == std::string::npos);

    CHECK(run_cli("verify bogus-suite").exit_code == 3);
}

TEST_CASE("list subcommand names the registry") {
    const auto result = run_cli("list");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("insufficiency") != std::string::npos);
    CHECK(result.output.find("bandit") != std::string::npos);
}
