#include "attrib/system.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "attrib/errors.hpp"

namespace attrib {

std::string AdaptiveSystem::label(int round, int z) const {
    const auto idx = static_cast<std::size_t>(round - 1);
    if (idx < payload.size() && payload[idx]) return payload[idx](z);
    return std::to_string(z);
}

ContinuationSpace AdaptiveSystem::continuation_space(int t) const {
    if (t < 0 || t > horizon) throw DomainError("continuation_space: round out of range");
    std::vector<int> radices(cardinality.begin() + t, cardinality.end());
    return ContinuationSpace(std::move(radices));
}

void AdaptiveSystem::validate() const {
    if (horizon < 1) throw DomainError("AdaptiveSystem: horizon must be >= 1");
    if (static_cast<int>(cardinality.size()) != horizon ||
        static_cast<int>(update.size()) != horizon ||
        static_cast<int>(kernel.size()) != horizon)
        throw DomainError("AdaptiveSystem: per-round component counts must equal the horizon");
    for (int n : cardinality)
        if (n < 1) throw DomainError("AdaptiveSystem: interaction space must be nonempty");
    if (initial_state.size() < 1) throw DomainError("AdaptiveSystem: state dimension must be >= 1");
    if (!(weight_cap > 0.0)) throw DomainError("AdaptiveSystem: weight cap must be positive");
    if (!eval.value || !eval.grad) throw DomainError("AdaptiveSystem: evaluation not set");
}

WeightVector WeightVector::ones(int T) {
    return WeightVector{std::vector<double>(static_cast<std::size_t>(T), 1.0)};
}

WeightVector one_coordinate_weights(int T, int t, double eps, double cap) {
    if (T < 1) throw DomainError("one_coordinate_weights: horizon must be >= 1");
    if (t < 1 || t > T) throw DomainError("one_coordinate_weights: round out of range");
    if (!(eps >= -1.0 && eps <= cap))
        throw DomainError("one_coordinate_weights: eps outside [-1, cap]");
    WeightVector w = WeightVector::ones(T);
    w.w[static_cast<std::size_t>(t - 1)] = 1.0 + eps;
    return w;
}

namespace {

void check_history(const AdaptiveSystem& sys, const History& h, std::size_t expected_len,
                   const char* who) {
    if (h.size() != expected_len)
        throw DomainError(std::string(who) + ": history length mismatch");
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] < 0 || h[i] >= sys.cardinality[i])
            throw DomainError(std::string(who) + ": interaction index out of range at round " +
                              std::to_string(i + 1));
}

void check_prefix(const AdaptiveSystem& sys, const History& h, const char* who) {
    if (h.size() > static_cast<std::size_t>(sys.horizon))
        throw DomainError(std::string(who) + ": prefix longer than horizon");
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] < 0 || h[i] >= sys.cardinality[i])
            throw DomainError(std::string(who) + ": interaction index out of range at round " +
                              std::to_string(i + 1));
}

void check_weights(const AdaptiveSystem& sys, const WeightVector& w, const char* who) {
    if (w.size() != sys.horizon)
        throw DomainError(std::string(who) + ": weight vector length mismatch");
    for (double wi : w.w)
        if (!(wi >= 0.0 && wi <= 1.0 + sys.weight_cap))
            throw DomainError(std::string(who) + ": weight outside [0, 1+cap]");
}

}  // namespace

std::vector<State> replay_prefix_states(const AdaptiveSystem& sys, const WeightVector& w,
                                        const History& prefix) {
    check_prefix(sys, prefix, "replay_prefix_states");
    check_weights(sys, w, "replay_prefix_states");
    std::vector<State> states;
    states.reserve(prefix.size() + 1);
    states.push_back(sys.initial_state);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        const int round = static_cast<int>(i) + 1;
        State next = sys.update[i].value(states.back(), prefix[i], w.at(round));
        if (!next.allFinite())
            throw NumericError("replay produced a non-finite state at round " +
                                   std::to_string(round),
                               round);
        states.push_back(std::move(next));
    }
    return states;
}

std::vector<State> replay_states(const AdaptiveSystem& sys, const WeightVector& w,
                                 const History& log) {
    check_history(sys, log, static_cast<std::size_t>(sys.horizon), "replay_states");
    return replay_prefix_states(sys, w, log);
}

namespace {

double weighted_history_probability(const AdaptiveSystem& sys, const WeightVector& w,
                                    const History& h) {
    const auto states = replay_prefix_states(sys, w, h);
    double p = 1.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        std::span<const int> ctx(h.data(), i);
        p *= sys.kernel[i].mass(states[i], ctx, h[i]);
    }
    return p;
}

}  // namespace

double path_probability(const AdaptiveSystem& sys, const WeightVector& w,
                        const History& history) {
    check_history(sys, history, static_cast<std::size_t>(sys.horizon), "path_probability");
    return weighted_history_probability(sys, w, history);
}

double prefix_probability(const AdaptiveSystem& sys, const History& prefix) {
    check_prefix(sys, prefix, "prefix_probability");
    const double p = weighted_history_probability(sys, WeightVector::ones(sys.horizon), prefix);
#ifndef NDEBUG
    // Perturbing the prefix's own final round cannot change the prefix
    // probability: the reweighted update only acts after the interaction.
    if (!prefix.empty()) {
        const int t = static_cast<int>(prefix.size());
        for (double eps : {-1.0, sys.weight_cap}) {
            const auto wp = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
            assert(std::abs(weighted_history_probability(sys, wp, prefix) - p) <= 1e-12);
        }
    }
#endif
    return p;
}

FutureLaw conditional_future_law(const AdaptiveSystem& sys, int t, double eps,
                                 const History& prefix) {
    if (t < 1 || t > sys.horizon) throw DomainError("conditional_future_law: round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError("conditional_future_law: prefix length must equal the round");
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError("conditional_future_law: prefix has zero baseline probability");

    const auto w = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    FutureLaw law{sys.continuation_space(t), {}};
    law.prob.assign(law.space.size(), 0.0);

    // DFS over continuations, replaying the perturbed learner and taking the
    // product of kernel masses at the replayed states.
    History path = prefix;
    const auto seed_states = replay_prefix_states(sys, w, prefix);
    std::vector<int> digits(static_cast<std::size_t>(law.space.rounds()), 0);

    std::function<void(int, const State&, double)> walk =
        [&](int s, const State& theta, double prob) {
            if (s > sys.horizon) {
                law.prob[law.space.encode(digits)] = prob;
                return;
            }
            const auto k = static_cast<std::size_t>(s - 1);
            for (int z = 0; z < sys.cardinality[k]; ++z) {
                // The span must be rebuilt per use: the recursive push_back
                // below may reallocate the path vector.
                const double m = sys.kernel[k].mass(theta, std::span<const int>(path.data(), k), z);
                digits[static_cast<std::size_t>(s - 1 - t)] = z;
                path.push_back(z);
                State next = sys.update[k].value(theta, z, w.at(s));
                if (!next.allFinite())
                    throw NumericError("replay produced a non-finite state at round " +
                                           std::to_string(s),
                                       s);
                walk(s + 1, next, prob * m);
                path.pop_back();
            }
        };
    walk(t + 1, seed_states.back(), 1.0);
    return law;
}

}  // namespace attrib
