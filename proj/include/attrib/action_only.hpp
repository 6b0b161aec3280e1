#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "attrib/system.hpp"

namespace attrib {

// One round of a factorized environment: contexts and rewards are generated
// by the environment without looking at the learner state; only the policy
// depends on it. Interactions are flattened as z = (x * |A| + a) * |R| + r.
struct ActionOnlyRound {
    int num_contexts = 1;
    int num_actions = 1;
    int num_rewards = 1;
    std::function<double(std::span<const int>, int)> context_mass;           // D_s(x | prefix)
    std::function<double(std::span<const int>, int, int, int)> reward_mass;  // P_s(r | x, a, prefix)
};

// Shared action law pi_theta(a | x) with its analytic state gradient. The
// context index is round-local; rounds that need distinct behaviour declare
// distinct context values.
struct ActionPolicy {
    std::function<double(const State&, int, int)> prob;
    std::function<State(const State&, int, int)> grad;
};

// Factorized adaptive system. The assembled kernel is the exact product of
// the context, policy, and reward factors, and its state gradient flows only
// through the policy.
struct ActionOnlySystem {
    int horizon = 0;
    std::vector<ActionOnlyRound> rounds;
    ActionPolicy policy;
    State initial_state;
    std::vector<RoundUpdate> update;
    Evaluation eval;
    double weight_cap = 1.0;

    int cardinality(int round) const;
    int encode(int round, int x, int a, int r) const;
    std::array<int, 3> decode(int round, int z) const;  // (x, a, r)

    AdaptiveSystem to_adaptive() const;
};

// Pathwise product of perturbed-over-baseline policy factors along a
// continuation. Equals 1 exactly at eps = 0. Throws OverlapError when a
// baseline factor is zero.
double policy_ratio(const ActionOnlySystem& aos, int t, double eps, const History& prefix,
                    std::span<const int> continuation);

// Support check for the change of measure: every continuation reachable under
// the perturbation must be reachable at baseline.
struct OverlapReport {
    bool ok = true;
    std::optional<History> witness;  // continuation with Q^eps > 0, Q^0 = 0
};

OverlapReport overlap_check(const ActionOnlySystem& aos, int t, const History& prefix,
                            double eps);

// Importance-sampling evaluation of the interventional target on baseline
// data: sum over baseline-supported continuations of prob * ratio * value.
// Exact (full enumeration); agrees with direct enumeration under overlap.
double psi_importance(const ActionOnlySystem& aos, int t, double eps, const History& prefix);

// Seeded Monte Carlo estimate of psi_importance. Draws i.i.d. baseline
// continuations by inverse CDF over the enumerated conditional law; sample i
// depends only on (seed, i), so any partition of the index range reproduces
// the same estimate.
struct McEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

McEstimate mc_psi(const ActionOnlySystem& aos, int t, double eps, const History& prefix,
                  std::size_t n, std::uint64_t seed);

// Terminal states reachable over supported continuations and a grid of
// perturbation levels, deduplicated within 1e-12.
std::vector<State> reachable_set(const AdaptiveSystem& sys, int t, const History& prefix,
                                 std::span<const double> eps_grid);

// Horizon-2 pair with identical baseline path laws but different
// interventional influences, obtained by hiding the state dependence in the
// reward law or in the context law.
enum class FrontierKind { reward, context };

std::pair<AdaptiveSystem, AdaptiveSystem> negative_frontier_pair(FrontierKind kind,
                                                                 double gamma_a, double gamma_b);

// The sigmoid counterexample recast with the state dependence moved into the
// action policy, which makes it a legal member of the factorized class.
ActionOnlySystem insufficiency_action_only(double gamma);

}  // namespace attrib
