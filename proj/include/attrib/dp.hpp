#pragma once

#include <map>
#include <span>

#include "attrib/enumeration.hpp"
#include "attrib/system.hpp"

namespace attrib {

// Tail bounds for depth-L truncation, together with the exact omitted tail.
struct TruncationBounds {
    double exact_tail = 0.0;         // sum of the omitted per-round gap terms
    double oscillation_bound = 0.0;  // E[ L^TV * |Gamma| * osc ] summed over the tail
    double uniform_bound = 0.0;      // worst-case constants product form
    bool tv_probed = false;          // true when the TV supremum was only probed (d >= 3)
};

// One pass over the enumerated continuation tree rooted at a realized prefix.
// Holds the baseline replayed states, the forward sensitivities of the
// round-t perturbation, and the backward value/influence recursions; every
// model-based quantity conditional on the prefix reads off this tree.
class RecursionTree {
public:
    RecursionTree(const AdaptiveSystem& sys, int t, const History& prefix);

    int round() const { return t_; }
    const History& prefix() const { return prefix_; }
    const AdaptiveSystem& system() const { return *sys_; }

    double interventional_influence() const;     // combined backward recursion at the root
    double conditional_expected_replay() const;  // fixed-future backward recursion at the root
    double baseline_value() const;               // expected terminal evaluation at eps = 0
    double gap() const;                          // interventional - conditional replay

    // E[Xi_s | prefix] for s = t+1..T, keyed by the round s.
    std::map<int, double> expected_xi() const;

    // Forward sensitivity and continuation value at a continuation prefix
    // z_{t+1:s-1} given as the suffix beyond the conditioning prefix.
    const State& gamma(std::span<const int> suffix) const;
    double value(std::span<const int> suffix) const;
    double xi(std::span<const int> suffix) const;
    const State& replayed_state(std::span<const int> suffix) const;

    // Pathwise future-law score of a full continuation; zero off support.
    double score(std::span<const int> continuation) const;

    // Gap evaluated through the centered score covariance form.
    double score_centered_gap() const;

    // Truncated-recollection influence: conditional expected replay plus the
    // first L expected gap terms.
    double depth_influence(int L) const;

    // Omitted tail beyond depth L and its bounds.
    TruncationBounds truncation_bounds(int L) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        State theta;              // baseline replayed state entering round s
        State gamma;              // d theta / d eps at eps = 0
        double cond_prob = 1.0;   // baseline probability of the suffix given the prefix
        double jac_norm = 0.0;    // operator norm of the update Jacobian into this node
        int s = 0;                // round whose interaction is drawn at this node
        int first_child = -1;
        double V = 0.0, G = 0.0, M = 0.0, Xi = 0.0;
        std::vector<double> mass;   // kernel masses per child
        std::vector<State> kgrad;   // kernel state gradients per child
    };

    const Node& locate(std::span<const int> suffix) const;
    double tv_sensitivity(const Node& node, bool& probed) const;

    const AdaptiveSystem* sys_;
    int t_;
    History prefix_;
    std::vector<Node> nodes_;  // nodes_[0] is the root at round t+1
    std::vector<double> expected_xi_;  // indexed by s - (t+1)
};

// Exact model-based interventional influence (requires analytic kernel
// gradients and update Jacobians). Throws ConditioningError on a
// zero-probability prefix.
double influence_dp(const AdaptiveSystem& sys, int t, const History& prefix);

// Per-round expected contributions to the replay--intervention gap.
std::map<int, double> stagewise_xi(const AdaptiveSystem& sys, int t, const History& prefix);

// Pathwise score along a full realized log: the sum over future rounds of the
// log-kernel gradient dotted with the forward sensitivity. Returns 0 when the
// log leaves the baseline support.
double future_law_score(const AdaptiveSystem& sys, int t, const History& log);

// Expected terminal evaluation under the depth-L mixed future law: perturbed
// kernels for rounds t+1..t+L, baseline kernels afterwards, perturbed replay
// learner throughout.
double depth_L_target(const AdaptiveSystem& sys, int t, double eps, const History& prefix,
                      int L);

// Derivative at eps = 0 of the depth-L target.
double depth_L_influence(const AdaptiveSystem& sys, int t, const History& prefix, int L,
                         Mode mode = Mode::analytic, const FdOptions& fd = {});

// Exact tail of the depth-L truncation and its oscillation/uniform bounds.
TruncationBounds truncation_bounds(const AdaptiveSystem& sys, int t, const History& prefix,
                                   int L);

}  // namespace attrib
