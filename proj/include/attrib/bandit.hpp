#pragma once

#include <optional>

#include "attrib/action_only.hpp"

namespace attrib {

// Two-armed Bernoulli bandit trained by entropic mirror descent on the logit
// of the arm-1 pull probability. Interactions are (action, reward) pairs.
struct BanditConfig {
    double q = 0.25;             // initial pull probability of arm 1, strictly interior
    std::vector<double> eta;     // per-round learning rates, one per round
    double mu0 = 0.5, mu1 = 0.5; // arm reward probabilities

    // Optional terminal evaluation on the probability scale; identity on the
    // final pull probability when unset. Both fields must be set together.
    std::function<double(double)> terminal_value;
    std::function<double(double)> terminal_slope;

    int horizon() const { return static_cast<int>(eta.size()); }
    void validate() const;
};

// Builds the bandit as a factorized system (singleton context, Bernoulli
// policy on the logit state, state-independent reward law). The update maps
// carry analytic Jacobians on the logit scale and raise NumericError when the
// policy comes within 1e-12 of 0 or 1 during replay.
ActionOnlySystem bandit_system(const BanditConfig& cfg);

// Intermediate policy p_2 entering round 2 after the realized first
// interaction (arm 1, reward 1), under the round-1 perturbation.
double intermediate_policy(const BanditConfig& cfg, double eps);

// d p_2 / d eps at 0: (eta_1 / q) * p (1 - p) with p the baseline p_2.
double intermediate_policy_sensitivity(const BanditConfig& cfg);

// Round-2 final-policy maps p -> p_3 for the two reward-1 outcomes, with
// analytic derivatives. Evaluation at p in {0, 1} raises DomainError.
struct Round2Functions {
    std::function<double(double)> f;        // arm 1 pulled, reward 1
    std::function<double(double)> g;        // arm 0 pulled, reward 1
    std::function<double(double)> f_prime;
    std::function<double(double)> g_prime;
};

Round2Functions round2_functions(double eta2);

// Closed-form horizon-2 targets conditioned on the realized first interaction
// (1, 1). Half-point closed forms are attached when the intermediate policy
// is 1/2 and mu1 = 1.
struct TwoStepTargets {
    double intermediate = 0.0;       // p = p_2^0
    double sensitivity = 0.0;        // c_{q, eta_1, p}
    double replay = 0.0;             // c * R(p)
    double interventional = 0.0;     // c * G'(p)
    std::optional<double> replay_half_factor;          // R(1/2) closed form
    std::optional<double> interventional_half_factor;  // G'(1/2) closed form
};

TwoStepTargets two_step_targets(const BanditConfig& cfg);

// A realized second-round outcome with negative per-log replay influence.
struct SignFlipWitness {
    int z = 0;  // flattened (action, reward) index
    int action = 0;
    int reward = 0;
    double probability = 0.0;
    double replay_influence = 0.0;
};

// One row of the replay/intervention sign-separation scan.
struct SeparationResult {
    double mu0 = 0.0;
    double eta2 = 0.0;
    double replay_closed = 0.0;
    double interventional_closed = 0.0;
    double replay_enumerated = 0.0;
    double interventional_enumerated = 0.0;
    std::optional<SignFlipWitness> witness;
};

// Scans mu0 over the grid at fixed eta2 > 1 with mu1 = 1, q = 1/4 and
// eta_1 = log(3)/4 (which pins the intermediate policy at 1/2), returning the
// grid points where the conditional expected replay is strictly negative
// while the interventional influence is strictly positive. Every returned row
// is cross-checked against enumeration within 1e-10.
std::vector<SeparationResult> separation_search(double eta2, std::span<const double> mu0_grid);

std::vector<double> default_separation_mu0_grid();   // 0.90, 0.91, ..., 0.99
std::vector<double> default_separation_eta2_grid();  // 1.5, 2, 3

// Finds a positive-probability second-round outcome whose replay influence is
// strictly negative while the interventional influence is strictly positive.
// Returns nullopt when the configuration does not separate.
std::optional<SignFlipWitness> realized_sign_flip(const BanditConfig& cfg);

// Exact replay--intervention gap at the first round versus the stable
// small-step bound L_F (T-1) / (16 c^3) * eta_1 * sum_{u>1} eta_u. Requires
// the baseline policy to stay within [c, 1-c] on every enumerated path and
// eta_s <= c / (1-c); violations raise DomainError naming the offending path.
struct StabilityReport {
    double gap = 0.0;         // max over realized first interactions
    double bound = 0.0;
    double ratio_half_eta = 0.0;  // gap(eta) / gap(eta/2); NaN when both vanish
    double l_f = 0.0;
};

StabilityReport stability_gap_check(const BanditConfig& cfg, double c_floor);

}  // namespace attrib
