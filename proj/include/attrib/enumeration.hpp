#pragma once

#include <map>
#include <span>

#include "attrib/system.hpp"

namespace attrib {

// Computation route for influence quantities. Analytic routes use the exact
// model derivatives; finite-difference routes differentiate the enumerated
// targets in the perturbation parameter.
enum class Mode { analytic, finite_difference };

// Expected terminal evaluation after conditioning on the prefix and letting
// the perturbed learner regenerate the remaining rounds. Full enumeration.
double psi(const AdaptiveSystem& sys, int t, double eps, const History& prefix);

// Derivative at eps = 0 of the terminal evaluation along a fixed realized log.
double replay_influence(const AdaptiveSystem& sys, int t, const History& log,
                        Mode mode = Mode::analytic, const FdOptions& fd = {});

// E[ replay influence | prefix ] under the baseline conditional law.
double conditional_expected_replay(const AdaptiveSystem& sys, int t, const History& prefix,
                                   Mode mode = Mode::analytic, const FdOptions& fd = {});

// Derivative at eps = 0 of psi: the conditional interventional influence.
double interventional_influence(const AdaptiveSystem& sys, int t, const History& prefix,
                                Mode mode = Mode::analytic, const FdOptions& fd = {});

// First-order shift of the conditional future law at eps = 0. Entries sum to
// zero. The analytic route multiplies baseline probabilities by the pathwise
// score and throws SupportInstabilityError when a zero-probability
// continuation has a nonzero finite-difference derivative.
struct DotQ {
    ContinuationSpace space;
    std::vector<double> deriv;

    double sum() const;
};

DotQ dot_q(const AdaptiveSystem& sys, int t, const History& prefix,
           Mode mode = Mode::analytic, const FdOptions& fd = {});

// Both sides of the replay-plus-future-law split of the interventional
// influence, computed by independent routes, with the reconstruction residual.
struct Decomposition {
    double replay_term = 0.0;                // E[replay influence | prefix]
    double future_law_term = 0.0;            // sum_c dotQ(c) F(theta_{T+1}(h,c))
    double future_law_term_centered = 0.0;   // same with F(theta_{t+1}(h)) subtracted
    double total = 0.0;                      // interventional influence
    double residual = 0.0;                   // total - replay_term - future_law_term
};

Decomposition structural_decomposition(const AdaptiveSystem& sys, int t, const History& prefix,
                                       Mode mode = Mode::analytic, const FdOptions& fd = {});

// Slot-level influence: derivative of the unconditional perturbed expectation,
// averaging over all realized prefixes at round t.
double slot_influence(const AdaptiveSystem& sys, int t, const FdOptions& fd = {});

// Finite effects of a concrete eps, conditional on the prefix.
struct FiniteEffects {
    double replay_expected = 0.0;      // E[F(theta^eps) - F(theta) | prefix], fixed logs
    double interventional = 0.0;       // Psi^eps - Psi^0
};

// Bundle of the attribution quantities at one (round, prefix) pair.
struct InfluenceReport {
    History prefix;
    int round = 0;
    Mode mode = Mode::analytic;
    double replay_influence_cond = 0.0;
    double interventional_influence = 0.0;
    double future_law_correction = 0.0;
    std::map<double, FiniteEffects> finite_effects;
};

InfluenceReport influence_report(const AdaptiveSystem& sys, int t, const History& prefix,
                                 std::span<const double> eps_values,
                                 Mode mode = Mode::analytic, const FdOptions& fd = {});

}  // namespace attrib
