#include "attrib/tabular.hpp"

#include <cmath>
#include <memory>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

std::size_t snap(const std::vector<double>& grid, double x) {
    std::size_t best = 0;
    double dist = std::abs(grid[0] - x);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double d = std::abs(grid[i] - x);
        if (d < dist) {
            dist = d;
            best = i;
        }
    }
    return best;
}

std::vector<std::vector<double>> read_table(const nlohmann::json& j, const char* key,
                                            std::size_t rows, std::size_t cols) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError(std::string("tabular system: missing table '") + key + "'");
    auto table = j[key].get<std::vector<std::vector<double>>>();
    if (table.size() != rows)
        throw ConfigError(std::string("tabular system: '") + key +
                          "' must have one row per state-grid point");
    for (const auto& row : table)
        if (row.size() != cols)
            throw ConfigError(std::string("tabular system: '") + key +
                              "' row width must equal the round cardinality");
    return table;
}

}  // namespace

AdaptiveSystem tabular_system(const nlohmann::json& spec) {
    if (!spec.is_object()) throw ConfigError("tabular system: spec must be an object");
    if (!spec.contains("state_grid") || !spec["state_grid"].is_array() ||
        spec["state_grid"].empty())
        throw ConfigError("tabular system: nonempty 'state_grid' required");
    const auto grid = std::make_shared<const std::vector<double>>(
        spec["state_grid"].get<std::vector<double>>());

    AdaptiveSystem sys;
    sys.initial_state = State::Constant(1, spec.value("initial_state", (*grid)[0]));
    sys.weight_cap = spec.value("weight_cap", 1.0);
    if (!spec.contains("rounds") || !spec["rounds"].is_array() || spec["rounds"].empty())
        throw ConfigError("tabular system: nonempty 'rounds' required");

    const auto& rounds = spec["rounds"];
    sys.horizon = static_cast<int>(rounds.size());
    for (const auto& round : rounds) {
        if (!round.contains("cardinality") || !round["cardinality"].is_number_integer())
            throw ConfigError("tabular system: each round needs an integer 'cardinality'");
        const int n = round["cardinality"].get<int>();
        if (n < 1) throw ConfigError("tabular system: cardinality must be >= 1");
        sys.cardinality.push_back(n);

        const auto kernel = std::make_shared<const std::vector<std::vector<double>>>(
            read_table(round, "kernel", grid->size(), static_cast<std::size_t>(n)));
        for (const auto& row : *kernel) {
            double total = 0.0;
            for (double p : row) {
                if (p < 0.0 || p > 1.0)
                    throw ConfigError("tabular system: kernel entries must be probabilities");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw ConfigError("tabular system: kernel rows must sum to 1");
        }
        const auto next = std::make_shared<const std::vector<std::vector<double>>>(
            read_table(round, "next", grid->size(), static_cast<std::size_t>(n)));
        std::vector<std::vector<double>> slope_table(
            grid->size(), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        if (round.contains("weight_slope"))
            slope_table = read_table(round, "weight_slope", grid->size(),
                                     static_cast<std::size_t>(n));
        const auto slope =
            std::make_shared<const std::vector<std::vector<double>>>(std::move(slope_table));

        RoundKernel k;
        k.mass = [grid, kernel](const State& theta, std::span<const int>, int z) {
            return (*kernel)[snap(*grid, theta(0))][static_cast<std::size_t>(z)];
        };
        k.grad_theta = [](const State&, std::span<const int>, int) { return State::Zero(1); };
        sys.kernel.push_back(std::move(k));

        RoundUpdate u;
        u.value = [grid, next, slope](const State& theta, int z, double w) {
            const std::size_t g = snap(*grid, theta(0));
            State out(1);
            out << (*next)[g][static_cast<std::size_t>(z)] +
                       (w - 1.0) * (*slope)[g][static_cast<std::size_t>(z)];
            return out;
        };
        u.jac_theta = [](const State&, int, double) { return Matrix::Zero(1, 1); };
        u.jac_w = [grid, slope](const State& theta, int z, double) {
            State out(1);
            out << (*slope)[snap(*grid, theta(0))][static_cast<std::size_t>(z)];
            return out;
        };
        sys.update.push_back(std::move(u));
    }

    sys.eval.value = [](const State& theta) { return theta(0); };
    sys.eval.grad = [](const State&) { return State::Ones(1); };
    sys.validate();
    return sys;
}

}  // namespace attrib
