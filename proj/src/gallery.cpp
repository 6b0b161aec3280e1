#include "attrib/gallery.hpp"

#include <cmath>
#include <memory>

#include "attrib/dp.hpp"
#include "attrib/errors.hpp"

namespace attrib {

std::vector<double> default_oracle_grid() {
    std::vector<double> grid(41);
    for (int i = 0; i < 41; ++i) grid[static_cast<std::size_t>(i)] = -1.0 + 0.05 * i;
    return grid;
}

ReplayOracle replay_oracle(const AdaptiveSystem& sys, int t, const History& prefix,
                           std::span<const double> eps_grid) {
    if (t < 1 || t > sys.horizon) throw DomainError("replay_oracle: round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError("replay_oracle: prefix length must equal the round");
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError("replay_oracle: prefix has zero baseline probability");

    ReplayOracle oracle;
    oracle.space = sys.continuation_space(t);
    oracle.baseline_law = conditional_future_law(sys, t, 0.0, prefix).prob;
    oracle.eps_grid.assign(eps_grid.begin(), eps_grid.end());

    const auto shared = std::make_shared<const AdaptiveSystem>(sys);
    oracle.response.resize(oracle.space.size());
    oracle.response_curve.resize(oracle.space.size());
    for (std::size_t i = 0; i < oracle.space.size(); ++i) {
        History full = prefix;
        const auto digits = oracle.space.decode(i);
        full.insert(full.end(), digits.begin(), digits.end());
        auto curve = [shared, full, t](double eps) {
            const auto w = one_coordinate_weights(shared->horizon, t, eps, shared->weight_cap);
            return shared->eval.value(replay_states(*shared, w, full).back());
        };
        oracle.response[i].reserve(oracle.eps_grid.size());
        for (double eps : oracle.eps_grid) oracle.response[i].push_back(curve(eps));
        oracle.response_curve[i] = std::move(curve);
    }
    return oracle;
}

double oracle_reconstructed_influence(const ReplayOracle& oracle, const FdOptions& fd) {
    std::vector<double> contributions(oracle.space.size(), 0.0);
    const double lo = oracle.eps_grid.empty() ? -1.0 : oracle.eps_grid.front();
    const double hi = oracle.eps_grid.empty() ? 1.0 : oracle.eps_grid.back();
    for (std::size_t i = 0; i < oracle.space.size(); ++i) {
        if (!(oracle.baseline_law[i] > 0.0)) continue;
        contributions[i] =
            oracle.baseline_law[i] * eps_derivative(oracle.response_curve[i], lo, hi, fd);
    }
    return pairwise_sum(contributions);
}

OracleComparison oracle_equality(const ReplayOracle& a, const ReplayOracle& b) {
    if (!(a.space == b.space) || a.eps_grid != b.eps_grid)
        throw DomainError("oracle_equality: oracles have different shapes");
    double dev = 0.0;
    for (std::size_t i = 0; i < a.baseline_law.size(); ++i)
        dev = std::max(dev, std::abs(a.baseline_law[i] - b.baseline_law[i]));
    for (std::size_t i = 0; i < a.response.size(); ++i)
        for (std::size_t j = 0; j < a.response[i].size(); ++j)
            dev = std::max(dev, std::abs(a.response[i][j] - b.response[i][j]));
    return {dev <= 1e-12, dev};
}

namespace {

AdaptiveSystem horizon2_skeleton() {
    AdaptiveSystem sys;
    sys.horizon = 2;
    sys.cardinality = {1, 2};
    sys.initial_state = State::Zero(1);
    sys.weight_cap = 1.0;

    sys.update.resize(2);
    sys.update[0].value = [](const State&, int, double w) {
        State out(1);
        out << w - 1.0;
        return out;
    };
    sys.update[0].jac_theta = [](const State&, int, double) { return Matrix::Zero(1, 1); };
    sys.update[0].jac_w = [](const State&, int, double) {
        State out(1);
        out << 1.0;
        return out;
    };

    sys.eval.value = [](const State& theta) { return theta(0); };
    sys.eval.grad = [](const State& theta) { return State::Ones(theta.size()); };

    sys.kernel.resize(2);
    sys.kernel[0].mass = [](const State&, std::span<const int>, int) { return 1.0; };
    sys.kernel[0].grad_theta = [](const State&, std::span<const int>, int) {
        return State::Zero(1);
    };

    sys.payload.resize(2);
    sys.payload[0] = [](int) { return std::string("z1*"); };
    sys.payload[1] = [](int z) { return "z2=" + std::to_string(z); };
    return sys;
}

}  // namespace

AdaptiveSystem insufficiency_family(double gamma) {
    AdaptiveSystem sys = horizon2_skeleton();

    // Second update overwrites the state with the realized interaction.
    sys.update[1].value = [](const State& theta, int z, double w) {
        State out(1);
        out << (1.0 - w) * theta(0) + w * static_cast<double>(z);
        return out;
    };
    sys.update[1].jac_theta = [](const State&, int, double w) {
        Matrix out(1, 1);
        out << 1.0 - w;
        return out;
    };
    sys.update[1].jac_w = [](const State& theta, int z, double) {
        State out(1);
        out << static_cast<double>(z) - theta(0);
        return out;
    };

    sys.kernel[1].mass = [gamma](const State& theta, std::span<const int>, int z) {
        const double p1 = 1.0 / (1.0 + std::exp(-gamma * theta(0)));
        return z == 1 ? p1 : 1.0 - p1;
    };
    sys.kernel[1].grad_theta = [gamma](const State& theta, std::span<const int>, int z) {
        const double p1 = 1.0 / (1.0 + std::exp(-gamma * theta(0)));
        State out(1);
        out << (z == 1 ? 1.0 : -1.0) * gamma * p1 * (1.0 - p1);
        return out;
    };
    return sys;
}

AdaptiveSystem exogenous_coin() {
    AdaptiveSystem sys = horizon2_skeleton();

    // Additive second update: the terminal value still moves with the
    // perturbation along every fixed log.
    sys.update[1].value = [](const State& theta, int z, double w) {
        State out(1);
        out << theta(0) + w * static_cast<double>(z);
        return out;
    };
    sys.update[1].jac_theta = [](const State&, int, double) {
        return Matrix::Identity(1, 1);
    };
    sys.update[1].jac_w = [](const State&, int z, double) {
        State out(1);
        out << static_cast<double>(z);
        return out;
    };

    sys.kernel[1].mass = [](const State&, std::span<const int>, int) { return 0.5; };
    sys.kernel[1].grad_theta = [](const State&, std::span<const int>, int) {
        return State::Zero(1);
    };
    return sys;
}

InsufficiencyCertificate insufficiency_certificate(double gamma_a, double gamma_b, double eps) {
    if (gamma_a * eps == gamma_b * eps)
        throw DomainError("insufficiency_certificate: gamma_a * eps must differ from "
                          "gamma_b * eps");

    const AdaptiveSystem sys_a = insufficiency_family(gamma_a);
    const AdaptiveSystem sys_b = insufficiency_family(gamma_b);
    const History prefix{0};
    const auto grid = default_oracle_grid();

    InsufficiencyCertificate cert;
    cert.gamma_a = gamma_a;
    cert.gamma_b = gamma_b;
    cert.eps = eps;
    cert.oracle_a = replay_oracle(sys_a, 1, prefix, grid);
    cert.oracle_b = replay_oracle(sys_b, 1, prefix, grid);
    const auto cmp = oracle_equality(cert.oracle_a, cert.oracle_b);
    cert.oracle_deviation = cmp.max_deviation;
    cert.oracles_equal = cmp.equal;
    cert.psi_a = psi(sys_a, 1, eps, prefix);
    cert.psi_b = psi(sys_b, 1, eps, prefix);
    cert.influence_a = influence_dp(sys_a, 1, prefix);
    cert.influence_b = influence_dp(sys_b, 1, prefix);
    cert.targets_differ = std::abs(cert.psi_a - cert.psi_b) > 0.0;
    return cert;
}

namespace {

nlohmann::json oracle_to_json(const ReplayOracle& oracle) {
    nlohmann::json j;
    j["baseline_law"] = oracle.baseline_law;
    j["eps_grid"] = oracle.eps_grid;
    j["response"] = oracle.response;
    return j;
}

}  // namespace

nlohmann::json certificate_to_json(const InsufficiencyCertificate& cert) {
    nlohmann::json j;
    j["kind"] = "replay-oracle-insufficiency";
    j["gamma_a"] = cert.gamma_a;
    j["gamma_b"] = cert.gamma_b;
    j["eps"] = cert.eps;
    j["oracle_a"] = oracle_to_json(cert.oracle_a);
    j["oracle_b"] = oracle_to_json(cert.oracle_b);
    j["oracle_deviation"] = cert.oracle_deviation;
    j["oracles_equal"] = cert.oracles_equal;
    j["psi_a"] = cert.psi_a;
    j["psi_b"] = cert.psi_b;
    j["psi_gap"] = std::abs(cert.psi_a - cert.psi_b);
    j["influence_a"] = cert.influence_a;
    j["influence_b"] = cert.influence_b;
    j["targets_differ"] = cert.targets_differ;
    return j;
}

}  // namespace attrib
