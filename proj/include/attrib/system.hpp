#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attrib/numerics.hpp"

namespace attrib {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Realized interaction indices z_1..z_l, one entry per round, l <= T.
using History = std::vector<int>;

// One-round learner update U_t with analytic derivatives. The weight argument
// scales the direct learning effect of the observed interaction.
struct RoundUpdate {
    std::function<State(const State&, int, double)> value;       // U_t(theta, z, w)
    std::function<Matrix(const State&, int, double)> jac_theta;  // d x d
    std::function<State(const State&, int, double)> jac_w;       // d-vector
};

// One-round interaction law K_t with its analytic state gradient. The prefix
// argument is the realized history z_{1:t-1}.
struct RoundKernel {
    std::function<double(const State&, std::span<const int>, int)> mass;
    std::function<State(const State&, std::span<const int>, int)> grad_theta;
};

// Terminal evaluation F of the final learner state.
struct Evaluation {
    std::function<double(const State&)> value;
    std::function<State(const State&)> grad;
};

// A finite-horizon adaptive learning system: per-round finite interaction
// spaces, smooth update maps, state-dependent interaction kernels, and a
// terminal evaluation.
struct AdaptiveSystem {
    int horizon = 0;                  // T
    std::vector<int> cardinality;     // n_t for t = 1..T
    State initial_state;              // theta_1
    std::vector<RoundUpdate> update;  // U_1..U_T
    std::vector<RoundKernel> kernel;  // K_1..K_T
    Evaluation eval;
    double weight_cap = 1.0;          // rho > 0; weights live in [0, 1+rho]

    // Optional human-readable payload per round (index -> label).
    std::vector<std::function<std::string(int)>> payload;

    int dim() const { return static_cast<int>(initial_state.size()); }
    std::string label(int round, int z) const;

    // Continuation index space for rounds t+1..T.
    ContinuationSpace continuation_space(int t) const;

    void validate() const;  // structural checks; throws DomainError
};

// Per-round learning weights, each within [0, 1+cap].
struct WeightVector {
    std::vector<double> w;

    double at(int round) const { return w[static_cast<std::size_t>(round - 1)]; }
    int size() const { return static_cast<int>(w.size()); }

    static WeightVector ones(int T);
};

// The one-coordinate family w_s = 1 + eps * 1{s == t}. Throws DomainError when
// eps lies outside [-1, cap].
WeightVector one_coordinate_weights(int T, int t, double eps, double cap = 1.0);

// Replay: push the weighted learner through a fixed realized log. Returns
// theta_1..theta_{T+1}. Throws NumericError (with the offending round) if a
// non-finite state is produced.
std::vector<State> replay_states(const AdaptiveSystem& sys, const WeightVector& w,
                                 const History& log);

// Replay over the first prefix.size() rounds only; returns theta_1..theta_{l+1}.
std::vector<State> replay_prefix_states(const AdaptiveSystem& sys, const WeightVector& w,
                                        const History& prefix);

// Probability of a full history under the path law induced by weights w.
double path_probability(const AdaptiveSystem& sys, const WeightVector& w,
                        const History& history);

// Baseline probability of a prefix. Debug builds also assert the invariance
// of the prefix probability under the one-coordinate perturbation at the
// prefix's final round.
double prefix_probability(const AdaptiveSystem& sys, const History& prefix);

// Conditional law of the remaining rounds z_{t+1:T} given the realized prefix,
// under the one-coordinate perturbation (t, eps). Indexed by the system's
// continuation space at t.
struct FutureLaw {
    ContinuationSpace space;
    std::vector<double> prob;
};

FutureLaw conditional_future_law(const AdaptiveSystem& sys, int t, double eps,
                                 const History& prefix);

}  // namespace attrib
