#pragma once

#include <json.hpp>

#include "attrib/enumeration.hpp"
#include "attrib/system.hpp"

namespace attrib {

// The richest replay-side summary at a prefix: the baseline law over
// continuations together with every fixed-log response curve, stored both as
// closures and as a sampled table on a fixed perturbation grid.
struct ReplayOracle {
    ContinuationSpace space;
    std::vector<double> baseline_law;
    std::vector<double> eps_grid;
    std::vector<std::vector<double>> response;  // [continuation][grid point]
    std::vector<std::function<double(double)>> response_curve;
};

std::vector<double> default_oracle_grid();  // 41 points on [-1, 1]

ReplayOracle replay_oracle(const AdaptiveSystem& sys, int t, const History& prefix,
                           std::span<const double> eps_grid);

// Influence reconstructed from replay-side information alone: the baseline
// expectation of the response-curve slopes at 0. Exact for state-independent
// future kernels, and only then.
double oracle_reconstructed_influence(const ReplayOracle& oracle, const FdOptions& fd = {});

struct OracleComparison {
    bool equal = false;
    double max_deviation = 0.0;
};

// Table comparison of two oracles over the same prefix, grid, and
// continuation space. Shape mismatches throw DomainError.
OracleComparison oracle_equality(const ReplayOracle& a, const ReplayOracle& b);

// The horizon-2 sigmoid family: a singleton first interaction, a {0, 1}
// second interaction drawn with probability sigma(gamma * theta), a first
// update that writes the perturbation into the state, and the second
// interaction as the terminal value.
AdaptiveSystem insufficiency_family(double gamma);

// A state-independent coin-flip variant whose replay responses move with the
// perturbation; its oracle differs from the sigmoid family's.
AdaptiveSystem exogenous_coin();

// Full numeric certificate that two members of the sigmoid family share a
// replay oracle while their interventional targets differ.
struct InsufficiencyCertificate {
    double gamma_a = 0.0, gamma_b = 0.0, eps = 0.0;
    ReplayOracle oracle_a, oracle_b;
    double oracle_deviation = 0.0;
    double psi_a = 0.0, psi_b = 0.0;     // perturbed targets at eps
    double influence_a = 0.0, influence_b = 0.0;
    bool oracles_equal = false;
    bool targets_differ = false;
};

InsufficiencyCertificate insufficiency_certificate(double gamma_a, double gamma_b, double eps);

nlohmann::json certificate_to_json(const InsufficiencyCertificate& cert);

}  // namespace attrib
