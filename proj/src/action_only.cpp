#include "attrib/action_only.hpp"

#include <cmath>
#include <string>

#include "attrib/errors.hpp"

namespace attrib {

int ActionOnlySystem::cardinality(int round) const {
    const auto& r = rounds[static_cast<std::size_t>(round - 1)];
    return r.num_contexts * r.num_actions * r.num_rewards;
}

int ActionOnlySystem::encode(int round, int x, int a, int r) const {
    const auto& rd = rounds[static_cast<std::size_t>(round - 1)];
    return (x * rd.num_actions + a) * rd.num_rewards + r;
}

std::array<int, 3> ActionOnlySystem::decode(int round, int z) const {
    const auto& rd = rounds[static_cast<std::size_t>(round - 1)];
    const int r = z % rd.num_rewards;
    const int a = (z / rd.num_rewards) % rd.num_actions;
    const int x = z / (rd.num_rewards * rd.num_actions);
    return {x, a, r};
}

AdaptiveSystem ActionOnlySystem::to_adaptive() const {
    AdaptiveSystem sys;
    sys.horizon = horizon;
    sys.initial_state = initial_state;
    sys.update = update;
    sys.eval = eval;
    sys.weight_cap = weight_cap;
    sys.cardinality.resize(static_cast<std::size_t>(horizon));
    sys.kernel.resize(static_cast<std::size_t>(horizon));
    sys.payload.resize(static_cast<std::size_t>(horizon));
    for (int s = 1; s <= horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        sys.cardinality[k] = cardinality(s);
        const ActionOnlyRound round = rounds[k];
        const ActionPolicy pol = policy;
        auto self = *this;
        sys.kernel[k].mass = [self, round, pol, s](const State& theta,
                                                   std::span<const int> prefix, int z) {
            const auto [x, a, r] = self.decode(s, z);
            return round.context_mass(prefix, x) * pol.prob(theta, x, a) *
                   round.reward_mass(prefix, x, a, r);
        };
        sys.kernel[k].grad_theta = [self, round, pol, s](const State& theta,
                                                         std::span<const int> prefix, int z) {
            const auto [x, a, r] = self.decode(s, z);
            return State(round.context_mass(prefix, x) * round.reward_mass(prefix, x, a, r) *
                         pol.grad(theta, x, a));
        };
        sys.payload[k] = [self, s](int z) {
            const auto [x, a, r] = self.decode(s, z);
            return "(x=" + std::to_string(x) + ",a=" + std::to_string(a) +
                   ",r=" + std::to_string(r) + ")";
        };
    }
    return sys;
}

namespace {

void check_continuation_shape(const ActionOnlySystem& aos, int t, const History& prefix,
                              std::span<const int> continuation, const char* who) {
    if (t < 1 || t > aos.horizon) throw DomainError(std::string(who) + ": round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError(std::string(who) + ": prefix length must equal the round");
    if (continuation.size() != static_cast<std::size_t>(aos.horizon - t))
        throw DomainError(std::string(who) + ": continuation length mismatch");
}

}  // namespace

double policy_ratio(const ActionOnlySystem& aos, int t, double eps, const History& prefix,
                    std::span<const int> continuation) {
    check_continuation_shape(aos, t, prefix, continuation, "policy_ratio");
    const AdaptiveSystem sys = aos.to_adaptive();
    const auto w_pert = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    const auto w_base = WeightVector::ones(sys.horizon);

    History full = prefix;
    full.insert(full.end(), continuation.begin(), continuation.end());
    const auto pert = replay_states(sys, w_pert, full);
    const auto base = replay_states(sys, w_base, full);

    double ratio = 1.0;
    for (int s = t + 1; s <= aos.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        const auto [x, a, r] = aos.decode(s, full[k]);
        const double denom = aos.policy.prob(base[k], x, a);
        if (!(denom > 0.0))
            throw OverlapError("policy_ratio: zero baseline policy factor at round " +
                                   std::to_string(s),
                               History(continuation.begin(), continuation.end()), s);
        ratio *= aos.policy.prob(pert[k], x, a) / denom;
    }
    return ratio;
}

OverlapReport overlap_check(const ActionOnlySystem& aos, int t, const History& prefix,
                            double eps) {
    const AdaptiveSystem sys = aos.to_adaptive();
    const FutureLaw perturbed = conditional_future_law(sys, t, eps, prefix);
    const FutureLaw baseline = conditional_future_law(sys, t, 0.0, prefix);
    for (std::size_t i = 0; i < perturbed.prob.size(); ++i) {
        if (perturbed.prob[i] > 0.0 && !(baseline.prob[i] > 0.0)) {
            return OverlapReport{false, perturbed.space.decode(i)};
        }
    }
    return OverlapReport{true, std::nullopt};
}

double psi_importance(const ActionOnlySystem& aos, int t, double eps, const History& prefix) {
    const auto report = overlap_check(aos, t, prefix, eps);
    if (!report.ok)
        throw OverlapError("psi_importance: perturbed-supported continuation has zero baseline "
                           "probability",
                           *report.witness);

    const AdaptiveSystem sys = aos.to_adaptive();
    const auto w_pert = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    const FutureLaw baseline = conditional_future_law(sys, t, 0.0, prefix);

    std::vector<double> contributions(baseline.prob.size(), 0.0);
    History full = prefix;
    for (std::size_t i = 0; i < baseline.prob.size(); ++i) {
        if (!(baseline.prob[i] > 0.0)) continue;
        const auto digits = baseline.space.decode(i);
        full.resize(prefix.size());
        full.insert(full.end(), digits.begin(), digits.end());
        const double ratio = policy_ratio(aos, t, eps, prefix, digits);
        const double value = sys.eval.value(replay_states(sys, w_pert, full).back());
        contributions[i] = baseline.prob[i] * ratio * value;
    }
    return pairwise_sum(contributions);
}

McEstimate mc_psi(const ActionOnlySystem& aos, int t, double eps, const History& prefix,
                  std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("mc_psi: sample count must be positive");
    const auto report = overlap_check(aos, t, prefix, eps);
    if (!report.ok)
        throw OverlapError("mc_psi: perturbed-supported continuation has zero baseline "
                           "probability",
                           *report.witness);

    const AdaptiveSystem sys = aos.to_adaptive();
    const auto w_pert = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    const FutureLaw baseline = conditional_future_law(sys, t, 0.0, prefix);

    // Per-continuation contribution table and cumulative law for inverse-CDF
    // draws; the sampler never re-simulates the process.
    std::vector<double> table(baseline.prob.size(), 0.0);
    std::vector<double> cdf(baseline.prob.size(), 0.0);
    History full = prefix;
    double acc = 0.0;
    for (std::size_t i = 0; i < baseline.prob.size(); ++i) {
        acc += baseline.prob[i];
        cdf[i] = acc;
        if (!(baseline.prob[i] > 0.0)) continue;
        const auto digits = baseline.space.decode(i);
        full.resize(prefix.size());
        full.insert(full.end(), digits.begin(), digits.end());
        table[i] = policy_ratio(aos, t, eps, prefix, digits) *
                   sys.eval.value(replay_states(sys, w_pert, full).back());
    }
    if (!cdf.empty()) cdf.back() = std::max(cdf.back(), 1.0);

    std::vector<double> draws(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = uniform_from_bits(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            std::distance(cdf.begin(), it), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
        draws[i] = table[idx];
    }

    McEstimate out;
    out.n = n;
    out.seed = seed;
    out.estimate = pairwise_sum(draws) / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = draws[i] - out.estimate;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
        out.se = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

std::vector<State> reachable_set(const AdaptiveSystem& sys, int t, const History& prefix,
                                 std::span<const double> eps_grid) {
    if (t < 1 || t > sys.horizon) throw DomainError("reachable_set: round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError("reachable_set: prefix length must equal the round");

    std::vector<State> states;
    auto insert_dedup = [&](const State& s) {
        for (const State& existing : states)
            if ((existing - s).lpNorm<Eigen::Infinity>() <= 1e-12) return;
        states.push_back(s);
    };

    History full = prefix;
    for (double eps : eps_grid) {
        const FutureLaw law = conditional_future_law(sys, t, eps, prefix);
        const auto w = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
        for (std::size_t i = 0; i < law.prob.size(); ++i) {
            if (!(law.prob[i] > 0.0)) continue;
            const auto digits = law.space.decode(i);
            full.resize(prefix.size());
            full.insert(full.end(), digits.begin(), digits.end());
            insert_dedup(replay_states(sys, w, full).back());
        }
    }
    return states;
}

namespace {

// Horizon-2 system whose terminal value is the second interaction while a
// sigmoid law sigma(gamma * theta) governs that interaction. The first update
// writes the perturbation into the state; at baseline the law is exactly
// (1/2, 1/2) for every gamma.
AdaptiveSystem sigmoid_round2_system(double gamma, const char* round2_label) {
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

    sys.kernel.resize(2);
    sys.kernel[0].mass = [](const State&, std::span<const int>, int) { return 1.0; };
    sys.kernel[0].grad_theta = [](const State&, std::span<const int>, int) {
        return State::Zero(1);
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

    sys.eval.value = [](const State& theta) { return theta(0); };
    sys.eval.grad = [](const State& theta) { return State::Ones(theta.size()); };

    const std::string label = round2_label;
    sys.payload.resize(2);
    sys.payload[0] = [](int) { return std::string("z1*"); };
    sys.payload[1] = [label](int z) { return label + "=" + std::to_string(z); };
    return sys;
}

}  // namespace

std::pair<AdaptiveSystem, AdaptiveSystem> negative_frontier_pair(FrontierKind kind,
                                                                 double gamma_a, double gamma_b) {
    if (gamma_a == gamma_b)
        throw DomainError("negative_frontier_pair: parameters must differ");
    const char* label = (kind == FrontierKind::reward) ? "r" : "x";
    return {sigmoid_round2_system(gamma_a, label), sigmoid_round2_system(gamma_b, label)};
}

ActionOnlySystem insufficiency_action_only(double gamma) {
    ActionOnlySystem aos;
    aos.horizon = 2;
    aos.initial_state = State::Zero(1);
    aos.weight_cap = 1.0;

    // Two context values distinguish the rounds: the opening round always
    // draws x = 0 where the policy is a fixed point mass, the second round
    // always draws x = 1 where the policy is the sigmoid family.
    ActionOnlyRound r1;
    r1.num_contexts = 2;
    r1.num_actions = 2;
    r1.num_rewards = 1;
    r1.context_mass = [](std::span<const int>, int x) { return x == 0 ? 1.0 : 0.0; };
    r1.reward_mass = [](std::span<const int>, int, int, int) { return 1.0; };

    ActionOnlyRound r2 = r1;
    r2.context_mass = [](std::span<const int>, int x) { return x == 1 ? 1.0 : 0.0; };

    aos.rounds = {r1, r2};

    aos.policy.prob = [gamma](const State& theta, int x, int a) {
        if (x == 0) return a == 0 ? 1.0 : 0.0;
        const double p1 = 1.0 / (1.0 + std::exp(-gamma * theta(0)));
        return a == 1 ? p1 : 1.0 - p1;
    };
    aos.policy.grad = [gamma](const State& theta, int x, int a) -> State {
        if (x == 0) return State::Zero(1);
        const double p1 = 1.0 / (1.0 + std::exp(-gamma * theta(0)));
        State out(1);
        out << (a == 1 ? 1.0 : -1.0) * gamma * p1 * (1.0 - p1);
        return out;
    };

    aos.update.resize(2);
    aos.update[0].value = [](const State&, int, double w) {
        State out(1);
        out << w - 1.0;
        return out;
    };
    aos.update[0].jac_theta = [](const State&, int, double) { return Matrix::Zero(1, 1); };
    aos.update[0].jac_w = [](const State&, int, double) {
        State out(1);
        out << 1.0;
        return out;
    };
    // The terminal state records the chosen round-2 action (a = z % 2 under
    // the flattening with a single reward value).
    aos.update[1].value = [](const State& theta, int z, double w) {
        const int a = z % 2;
        State out(1);
        out << (1.0 - w) * theta(0) + w * static_cast<double>(a);
        return out;
    };
    aos.update[1].jac_theta = [](const State&, int, double w) {
        Matrix out(1, 1);
        out << 1.0 - w;
        return out;
    };
    aos.update[1].jac_w = [](const State& theta, int z, double) {
        const int a = z % 2;
        State out(1);
        out << static_cast<double>(a) - theta(0);
        return out;
    };

    aos.eval.value = [](const State& theta) { return theta(0); };
    aos.eval.grad = [](const State& theta) { return State::Ones(theta.size()); };
    return aos;
}

}  // namespace attrib
