#include "attrib/enumeration.hpp"

#include <cmath>
#include <functional>

#include "attrib/dp.hpp"
#include "attrib/errors.hpp"

namespace attrib {

namespace {

void require_prefix(const AdaptiveSystem& sys, int t, const History& prefix, const char* who) {
    if (t < 1 || t > sys.horizon) throw DomainError(std::string(who) + ": round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError(std::string(who) + ": prefix length must equal the round");
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError(std::string(who) + ": prefix has zero baseline probability");
}

// Terminal evaluations F(theta_{T+1}^{(t,eps)}(h, c)) per continuation index.
std::vector<double> terminal_values(const AdaptiveSystem& sys, int t, double eps,
                                    const History& prefix) {
    const auto w = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    const auto space = sys.continuation_space(t);
    std::vector<double> values(space.size(), 0.0);

    std::vector<int> digits(static_cast<std::size_t>(space.rounds()), 0);
    const State seed = replay_prefix_states(sys, w, prefix).back();
    std::function<void(int, const State&)> walk = [&](int s, const State& theta) {
        if (s > sys.horizon) {
            values[space.encode(digits)] = sys.eval.value(theta);
            return;
        }
        const auto k = static_cast<std::size_t>(s - 1);
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            digits[static_cast<std::size_t>(s - 1 - t)] = z;
            State next = sys.update[k].value(theta, z, 1.0);
            if (!next.allFinite())
                throw NumericError("non-finite replayed state at round " + std::to_string(s), s);
            walk(s + 1, next);
        }
    };
    walk(t + 1, seed);
    return values;
}

}  // namespace

double psi(const AdaptiveSystem& sys, int t, double eps, const History& prefix) {
    require_prefix(sys, t, prefix, "psi");
    const FutureLaw law = conditional_future_law(sys, t, eps, prefix);
    const auto values = terminal_values(sys, t, eps, prefix);
    std::vector<double> contributions(law.prob.size());
    for (std::size_t i = 0; i < law.prob.size(); ++i) contributions[i] = law.prob[i] * values[i];
    return pairwise_sum(contributions);
}

double replay_influence(const AdaptiveSystem& sys, int t, const History& log, Mode mode,
                        const FdOptions& fd) {
    if (log.size() != static_cast<std::size_t>(sys.horizon))
        throw DomainError("replay_influence: log must cover the full horizon");
    if (t < 1 || t > sys.horizon) throw DomainError("replay_influence: round out of range");

    if (mode == Mode::finite_difference) {
        return eps_derivative(
            [&](double e) {
                const auto w = one_coordinate_weights(sys.horizon, t, e, sys.weight_cap);
                return sys.eval.value(replay_states(sys, w, log).back());
            },
            -1.0, sys.weight_cap, fd);
    }

    const auto states = replay_states(sys, WeightVector::ones(sys.horizon), log);
    State gamma = sys.update[static_cast<std::size_t>(t - 1)].jac_w(
        states[static_cast<std::size_t>(t - 1)], log[static_cast<std::size_t>(t - 1)], 1.0);
    for (int s = t + 1; s <= sys.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        gamma = sys.update[k].jac_theta(states[k], log[k], 1.0) * gamma;
    }
    return sys.eval.grad(states.back()).dot(gamma);
}

double conditional_expected_replay(const AdaptiveSystem& sys, int t, const History& prefix,
                                   Mode mode, const FdOptions& fd) {
    require_prefix(sys, t, prefix, "conditional_expected_replay");
    const FutureLaw law = conditional_future_law(sys, t, 0.0, prefix);
    std::vector<double> contributions(law.prob.size(), 0.0);
    History log = prefix;
    for (std::size_t i = 0; i < law.prob.size(); ++i) {
        if (law.prob[i] == 0.0) continue;
        const auto digits = law.space.decode(i);
        log.resize(prefix.size());
        log.insert(log.end(), digits.begin(), digits.end());
        contributions[i] = law.prob[i] * replay_influence(sys, t, log, mode, fd);
    }
    return pairwise_sum(contributions);
}

double interventional_influence(const AdaptiveSystem& sys, int t, const History& prefix,
                                Mode mode, const FdOptions& fd) {
    require_prefix(sys, t, prefix, "interventional_influence");
    if (mode == Mode::analytic) return influence_dp(sys, t, prefix);
    return eps_derivative([&](double e) { return psi(sys, t, e, prefix); }, -1.0, sys.weight_cap,
                          fd);
}

double DotQ::sum() const {
    return pairwise_sum(deriv);
}

DotQ dot_q(const AdaptiveSystem& sys, int t, const History& prefix, Mode mode,
           const FdOptions& fd) {
    require_prefix(sys, t, prefix, "dot_q");
    const auto space = sys.continuation_space(t);

    auto fd_entries = [&]() {
        std::vector<double> out(space.size(), 0.0);
        auto law_at = [&](double e) { return conditional_future_law(sys, t, e, prefix).prob; };
        const double lo = -1.0, hi = sys.weight_cap;
        auto stencil = [&](double h) {
            std::vector<double> d(space.size(), 0.0);
            if (-h >= lo && h <= hi) {
                const auto plus = law_at(h);
                const auto minus = law_at(-h);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = (plus[i] - minus[i]) / (2.0 * h);
            } else {
                const double dir = (2.0 * h <= hi) ? h : -h;
                const auto f0 = law_at(0.0);
                const auto f1 = law_at(dir);
                const auto f2 = law_at(2.0 * dir);
                for (std::size_t i = 0; i < d.size(); ++i)
                    d[i] = (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * dir);
            }
            return d;
        };
        out = stencil(fd.step);
        if (fd.richardson) {
            const auto fine = stencil(fd.step / 2.0);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = (4.0 * fine[i] - out[i]) / 3.0;
        }
        return out;
    };

    DotQ result{space, {}};
    if (mode == Mode::finite_difference) {
        result.deriv = fd_entries();
        return result;
    }

    // Analytic route: dotQ(c) = Q0(c) * S(h, c), valid on an eps-stable support.
    const RecursionTree tree(sys, t, prefix);
    const FutureLaw base = conditional_future_law(sys, t, 0.0, prefix);
    result.deriv.assign(space.size(), 0.0);
    std::vector<double> fd_check;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto digits = space.decode(i);
        if (base.prob[i] > 0.0) {
            result.deriv[i] = base.prob[i] * tree.score(digits);
        } else {
            if (fd_check.empty()) fd_check = fd_entries();
            if (std::abs(fd_check[i]) > 1e-8)
                throw SupportInstabilityError(
                    "dot_q: continuation outside the baseline support has a nonzero "
                    "finite-difference derivative",
                    digits);
            result.deriv[i] = 0.0;
        }
    }
    return result;
}

Decomposition structural_decomposition(const AdaptiveSystem& sys, int t, const History& prefix,
                                       Mode mode, const FdOptions& fd) {
    require_prefix(sys, t, prefix, "structural_decomposition");
    Decomposition out;
    out.replay_term = conditional_expected_replay(sys, t, prefix, mode, fd);
    out.total = interventional_influence(sys, t, prefix, mode, fd);

    const DotQ dq = dot_q(sys, t, prefix, mode, fd);
    const auto values = terminal_values(sys, t, 0.0, prefix);
    const double f_prefix = sys.eval.value(
        replay_prefix_states(sys, WeightVector::ones(sys.horizon), prefix).back());

    std::vector<double> plain(dq.deriv.size()), centered(dq.deriv.size());
    for (std::size_t i = 0; i < dq.deriv.size(); ++i) {
        plain[i] = dq.deriv[i] * values[i];
        centered[i] = dq.deriv[i] * (values[i] - f_prefix);
    }
    out.future_law_term = pairwise_sum(plain);
    out.future_law_term_centered = pairwise_sum(centered);
    out.residual = out.total - out.replay_term - out.future_law_term;
    return out;
}

double slot_influence(const AdaptiveSystem& sys, int t, const FdOptions& fd) {
    if (t < 1 || t > sys.horizon) throw DomainError("slot_influence: round out of range");
    auto expectation = [&](double e) {
        const auto w = one_coordinate_weights(sys.horizon, t, e, sys.weight_cap);
        std::vector<double> contributions;
        History path;
        std::function<void(int, const State&, double)> walk =
            [&](int s, const State& theta, double prob) {
                if (s > sys.horizon) {
                    contributions.push_back(prob * sys.eval.value(theta));
                    return;
                }
                const auto k = static_cast<std::size_t>(s - 1);
                for (int z = 0; z < sys.cardinality[k]; ++z) {
                    // Rebuilt per use; the recursion below may grow the path.
                    const double m =
                        sys.kernel[k].mass(theta, std::span<const int>(path.data(), k), z);
                    path.push_back(z);
                    walk(s + 1, sys.update[k].value(theta, z, w.at(s)), prob * m);
                    path.pop_back();
                }
            };
        walk(1, sys.initial_state, 1.0);
        return pairwise_sum(contributions);
    };
    return eps_derivative(expectation, -1.0, sys.weight_cap, fd);
}

InfluenceReport influence_report(const AdaptiveSystem& sys, int t, const History& prefix,
                                 std::span<const double> eps_values, Mode mode,
                                 const FdOptions& fd) {
    require_prefix(sys, t, prefix, "influence_report");
    InfluenceReport report;
    report.prefix = prefix;
    report.round = t;
    report.mode = mode;
    const Decomposition dec = structural_decomposition(sys, t, prefix, mode, fd);
    report.replay_influence_cond = dec.replay_term;
    report.interventional_influence = dec.total;
    report.future_law_correction = dec.future_law_term;

    const double psi0 = psi(sys, t, 0.0, prefix);
    const FutureLaw base = conditional_future_law(sys, t, 0.0, prefix);
    const auto base_values = terminal_values(sys, t, 0.0, prefix);
    for (double eps : eps_values) {
        FiniteEffects fe;
        fe.interventional = psi(sys, t, eps, prefix) - psi0;
        const auto pert_values = terminal_values(sys, t, eps, prefix);
        std::vector<double> contributions(base.prob.size());
        for (std::size_t i = 0; i < base.prob.size(); ++i)
            contributions[i] = base.prob[i] * (pert_values[i] - base_values[i]);
        fe.replay_expected = pairwise_sum(contributions);
        report.finite_effects[eps] = fe;
    }
    return report;
}

}  // namespace attrib
