#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "attrib/system.hpp"

namespace attrib_test {

using attrib::AdaptiveSystem;
using attrib::History;
using attrib::State;
using attrib::WeightVector;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Prefix probability under arbitrary weights, computed directly from the
// replayed states; the independent oracle for the prefix-invariance checks.
inline double weighted_prefix_probability(const AdaptiveSystem& sys, const WeightVector& w,
                                          const History& prefix) {
    const auto states = attrib::replay_prefix_states(sys, w, prefix);
    double p = 1.0;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        std::span<const int> ctx(prefix.data(), i);
        p *= sys.kernel[i].mass(states[i], ctx, prefix[i]);
    }
    return p;
}

// Draws a positive-probability prefix of the given length from the baseline
// law by inverse CDF per round.
inline History sampled_prefix(const AdaptiveSystem& sys, int length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    History prefix;
    State theta = sys.initial_state;
    for (int s = 1; s <= length; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        std::span<const int> ctx(prefix.data(), prefix.size());
        double u = unif(rng);
        int chosen = sys.cardinality[k] - 1;
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            u -= sys.kernel[k].mass(theta, ctx, z);
            if (u <= 0.0) {
                chosen = z;
                break;
            }
        }
        prefix.push_back(chosen);
        theta = sys.update[k].value(theta, chosen, 1.0);
    }
    return prefix;
}

// Enumerates every full history together with its baseline probability.
inline void for_each_history(const AdaptiveSystem& sys,
                             const std::function<void(const History&, double)>& fn) {
    History path;
    std::function<void(const State&, double)> walk = [&](const State& theta, double prob) {
        if (path.size() == static_cast<std::size_t>(sys.horizon)) {
            fn(path, prob);
            return;
        }
        const auto k = path.size();
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            const double m = sys.kernel[k].mass(theta, std::span<const int>(path.data(), k), z);
            path.push_back(z);
            walk(sys.update[k].value(theta, z, 1.0), prob * m);
            path.pop_back();
        }
    };
    walk(sys.initial_state, 1.0);
}

// Replaces every kernel after round t with a point mass on the realized log,
// turning the continuation into a deterministic (and state-independent)
// future.
inline AdaptiveSystem freeze_future(const AdaptiveSystem& sys, int t, const History& log) {
    AdaptiveSystem out = sys;
    for (int s = t + 1; s <= sys.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        const int pinned = log[k];
        out.kernel[k].mass = [pinned](const State&, std::span<const int>, int z) {
            return z == pinned ? 1.0 : 0.0;
        };
        out.kernel[k].grad_theta = [dim = sys.dim()](const State&, std::span<const int>, int) {
            return State(State::Zero(dim));
        };
    }
    return out;
}

}  // namespace attrib_test
