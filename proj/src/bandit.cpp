#include "attrib/bandit.hpp"

#include <cmath>
#include <string>

#include "attrib/dp.hpp"
#include "attrib/enumeration.hpp"
#include "attrib/errors.hpp"

namespace attrib {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

constexpr double kPolicyEdge = 1e-12;

double guarded_policy(double x, int round) {
    const double p = sigmoid(x);
    if (p <= kPolicyEdge || p >= 1.0 - kPolicyEdge)
        throw NumericError("bandit policy reached the boundary at round " + std::to_string(round),
                           round);
    return p;
}

}  // namespace

void BanditConfig::validate() const {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("BanditConfig: q must be strictly interior");
    if (eta.empty()) throw DomainError("BanditConfig: at least one round is required");
    for (double e : eta)
        if (!(e >= 0.0)) throw DomainError("BanditConfig: learning rates must be nonnegative");
    if (!(mu0 >= 0.0 && mu0 <= 1.0 && mu1 >= 0.0 && mu1 <= 1.0))
        throw DomainError("BanditConfig: reward probabilities must lie in [0, 1]");
    if (static_cast<bool>(terminal_value) != static_cast<bool>(terminal_slope))
        throw DomainError("BanditConfig: terminal value and slope must be set together");
}

ActionOnlySystem bandit_system(const BanditConfig& cfg) {
    cfg.validate();
    const int T = cfg.horizon();

    ActionOnlySystem aos;
    aos.horizon = T;
    aos.initial_state = State::Constant(1, logit(cfg.q));
    aos.weight_cap = 1.0;

    ActionOnlyRound round;
    round.num_contexts = 1;
    round.num_actions = 2;
    round.num_rewards = 2;
    round.context_mass = [](std::span<const int>, int) { return 1.0; };
    round.reward_mass = [mu0 = cfg.mu0, mu1 = cfg.mu1](std::span<const int>, int, int a, int r) {
        const double mu = (a == 1) ? mu1 : mu0;
        return r == 1 ? mu : 1.0 - mu;
    };
    aos.rounds.assign(static_cast<std::size_t>(T), round);

    aos.policy.prob = [](const State& theta, int, int a) {
        const double p = sigmoid(theta(0));
        return a == 1 ? p : 1.0 - p;
    };
    aos.policy.grad = [](const State& theta, int, int a) {
        const double p = sigmoid(theta(0));
        State out(1);
        out << (a == 1 ? 1.0 : -1.0) * p * (1.0 - p);
        return out;
    };

    aos.update.resize(static_cast<std::size_t>(T));
    for (int s = 1; s <= T; ++s) {
        const double eta = cfg.eta[static_cast<std::size_t>(s - 1)];
        // z = 2a + r under the (x, a, r) flattening with a singleton context.
        aos.update[static_cast<std::size_t>(s - 1)].value = [eta, s](const State& theta, int z,
                                                                     double w) {
            const int a = z / 2, r = z % 2;
            const double p = guarded_policy(theta(0), s);
            const double step = (a == 1) ? 1.0 / p : -1.0 / (1.0 - p);
            State out(1);
            out << theta(0) + eta * w * static_cast<double>(r) * step;
            return out;
        };
        aos.update[static_cast<std::size_t>(s - 1)].jac_theta = [eta, s](const State& theta, int z,
                                                                         double w) {
            const int a = z / 2, r = z % 2;
            const double p = guarded_policy(theta(0), s);
            Matrix out(1, 1);
            out << 1.0 - eta * w * static_cast<double>(r) *
                            ((a == 1) ? (1.0 - p) / p : p / (1.0 - p));
            return out;
        };
        aos.update[static_cast<std::size_t>(s - 1)].jac_w = [eta, s](const State& theta, int z,
                                                                     double) {
            const int a = z / 2, r = z % 2;
            const double p = guarded_policy(theta(0), s);
            State out(1);
            out << eta * static_cast<double>(r) * ((a == 1) ? 1.0 / p : -1.0 / (1.0 - p));
            return out;
        };
    }

    if (cfg.terminal_value) {
        aos.eval.value = [f = cfg.terminal_value](const State& theta) {
            return f(sigmoid(theta(0)));
        };
        aos.eval.grad = [fp = cfg.terminal_slope](const State& theta) {
            const double p = sigmoid(theta(0));
            State out(1);
            out << fp(p) * p * (1.0 - p);
            return out;
        };
    } else {
        aos.eval.value = [](const State& theta) { return sigmoid(theta(0)); };
        aos.eval.grad = [](const State& theta) {
            const double p = sigmoid(theta(0));
            State out(1);
            out << p * (1.0 - p);
            return out;
        };
    }
    return aos;
}

double intermediate_policy(const BanditConfig& cfg, double eps) {
    cfg.validate();
    return sigmoid(logit(cfg.q) + cfg.eta[0] * (1.0 + eps) / cfg.q);
}

double intermediate_policy_sensitivity(const BanditConfig& cfg) {
    const double p = intermediate_policy(cfg, 0.0);
    return cfg.eta[0] / cfg.q * p * (1.0 - p);
}

Round2Functions round2_functions(double eta2) {
    if (!(eta2 > 0.0)) throw DomainError("round2_functions: eta must be positive");
    auto check = [](double p) {
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("round2_functions: policy argument must be strictly interior");
    };
    Round2Functions out;
    out.f = [eta2, check](double p) {
        check(p);
        return sigmoid(logit(p) + eta2 / p);
    };
    out.g = [eta2, check](double p) {
        check(p);
        return sigmoid(logit(p) - eta2 / (1.0 - p));
    };
    out.f_prime = [eta2, check](double p) {
        check(p);
        const double f = sigmoid(logit(p) + eta2 / p);
        return f * (1.0 - f) * (1.0 / (p * (1.0 - p)) - eta2 / (p * p));
    };
    out.g_prime = [eta2, check](double p) {
        check(p);
        const double g = sigmoid(logit(p) - eta2 / (1.0 - p));
        return g * (1.0 - g) * (1.0 / (p * (1.0 - p)) - eta2 / ((1.0 - p) * (1.0 - p)));
    };
    return out;
}

TwoStepTargets two_step_targets(const BanditConfig& cfg) {
    cfg.validate();
    if (cfg.horizon() != 2) throw DomainError("two_step_targets: horizon must be 2");
    const double eta2 = cfg.eta[1];
    const auto fns = round2_functions(eta2);

    TwoStepTargets out;
    out.intermediate = intermediate_policy(cfg, 0.0);
    out.sensitivity = intermediate_policy_sensitivity(cfg);
    const double p = out.intermediate;
    const double f = fns.f(p), g = fns.g(p);
    const double fp = fns.f_prime(p), gp = fns.g_prime(p);
    const double mu0 = cfg.mu0, mu1 = cfg.mu1;

    const double replay_factor = p * (mu1 * fp + (1.0 - mu1)) + (1.0 - p) * (mu0 * gp + (1.0 - mu0));
    const double interventional_factor = mu1 * f + (1.0 - mu1) * p + p * (mu1 * fp + (1.0 - mu1)) -
                                         (mu0 * g + (1.0 - mu0) * p) +
                                         (1.0 - p) * (mu0 * gp + (1.0 - mu0));
    out.replay = out.sensitivity * replay_factor;
    out.interventional = out.sensitivity * interventional_factor;

    if (mu1 == 1.0 && std::abs(p - 0.5) <= 1e-9) {
        const double bracket = (eta2 - 1.0) / (std::cosh(eta2) * std::cosh(eta2));
        out.replay_half_factor = 0.5 * ((1.0 - mu0) - (1.0 + mu0) * bracket);
        out.interventional_half_factor =
            (1.0 + mu0) * sigmoid(2.0 * eta2) - mu0 - 0.5 * (1.0 + mu0) * bracket;
    }
    return out;
}

namespace {

BanditConfig separation_config(double eta2, double mu0) {
    BanditConfig cfg;
    cfg.q = 0.25;
    cfg.eta = {std::log(3.0) / 4.0, eta2};
    cfg.mu0 = mu0;
    cfg.mu1 = 1.0;
    return cfg;
}

}  // namespace

std::vector<double> default_separation_mu0_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(0.90 + 0.01 * i);
    return grid;
}

std::vector<double> default_separation_eta2_grid() { return {1.5, 2.0, 3.0}; }

std::vector<SeparationResult> separation_search(double eta2, std::span<const double> mu0_grid) {
    if (!(eta2 > 0.0)) throw DomainError("separation_search: eta2 must be positive");
    std::vector<SeparationResult> rows;
    for (double mu0 : mu0_grid) {
        const BanditConfig cfg = separation_config(eta2, mu0);
        const TwoStepTargets closed = two_step_targets(cfg);

        const AdaptiveSystem sys = bandit_system(cfg).to_adaptive();
        const History prefix{3};  // realized (a=1, r=1)
        const double replay_enum = conditional_expected_replay(sys, 1, prefix);
        const double interventional_enum = influence_dp(sys, 1, prefix);
        if (std::abs(replay_enum - closed.replay) > 1e-10 ||
            std::abs(interventional_enum - closed.interventional) > 1e-10)
            throw NumericError("separation_search: closed form and enumeration disagree");

        if (closed.replay < 0.0 && closed.interventional > 0.0) {
            SeparationResult row;
            row.mu0 = mu0;
            row.eta2 = eta2;
            row.replay_closed = closed.replay;
            row.interventional_closed = closed.interventional;
            row.replay_enumerated = replay_enum;
            row.interventional_enumerated = interventional_enum;
            row.witness = realized_sign_flip(cfg);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::optional<SignFlipWitness> realized_sign_flip(const BanditConfig& cfg) {
    cfg.validate();
    if (cfg.horizon() != 2) throw DomainError("realized_sign_flip: horizon must be 2");

    const AdaptiveSystem sys = bandit_system(cfg).to_adaptive();
    const History prefix{3};
    const double replay_cond = conditional_expected_replay(sys, 1, prefix);
    const double interventional = influence_dp(sys, 1, prefix);
    if (!(replay_cond < 0.0 && interventional > 0.0)) return std::nullopt;

    const FutureLaw law = conditional_future_law(sys, 1, 0.0, prefix);
    for (std::size_t i = 0; i < law.prob.size(); ++i) {
        if (!(law.prob[i] > 0.0)) continue;
        History log = prefix;
        log.push_back(static_cast<int>(i));
        const double infl = replay_influence(sys, 1, log);
        if (infl < 0.0) {
            SignFlipWitness w;
            w.z = static_cast<int>(i);
            w.action = static_cast<int>(i) / 2;
            w.reward = static_cast<int>(i) % 2;
            w.probability = law.prob[i];
            w.replay_influence = infl;
            return w;
        }
    }
    return std::nullopt;
}

namespace {

double max_abs_slope(const BanditConfig& cfg, double lo, double hi) {
    if (!cfg.terminal_slope) return 1.0;  // identity evaluation
    double best = 0.0;
    const int grid = 4096;
    for (int i = 0; i <= grid; ++i) {
        const double p = lo + (hi - lo) * static_cast<double>(i) / grid;
        best = std::max(best, std::abs(cfg.terminal_slope(p)));
    }
    return best;
}

double max_first_round_gap(const BanditConfig& cfg, double c_floor) {
    const AdaptiveSystem sys = bandit_system(cfg).to_adaptive();

    // Regime check along every positive-probability path.
    std::function<void(History&, double)> scan = [&](History& path, double prob) {
        const auto states = replay_prefix_states(sys, WeightVector::ones(sys.horizon), path);
        for (std::size_t s = 0; s < states.size(); ++s) {
            const double p = sigmoid(states[s](0));
            if (p < c_floor || p > 1.0 - c_floor) {
                std::string desc;
                for (std::size_t i = 0; i < path.size(); ++i)
                    desc += sys.label(static_cast<int>(i) + 1, path[i]);
                throw DomainError("stability_gap_check: policy leaves [c, 1-c] at step " +
                                  std::to_string(s + 1) + " along path " + desc);
            }
        }
        if (path.size() == static_cast<std::size_t>(sys.horizon)) return;
        const auto k = path.size();
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            const double m =
                sys.kernel[k].mass(states.back(), std::span<const int>(path.data(), k), z);
            if (!(m > 0.0)) continue;
            path.push_back(z);
            scan(path, prob * m);
            path.pop_back();
        }
    };
    History path;
    scan(path, 1.0);

    double gap = 0.0;
    for (int z = 0; z < sys.cardinality[0]; ++z) {
        History prefix{z};
        if (prefix_probability(sys, prefix) <= 0.0) continue;
        const RecursionTree tree(sys, 1, prefix);
        gap = std::max(gap, std::abs(tree.gap()));
    }
    return gap;
}

}  // namespace

StabilityReport stability_gap_check(const BanditConfig& cfg, double c_floor) {
    cfg.validate();
    if (!(c_floor > 0.0 && c_floor < 0.5))
        throw DomainError("stability_gap_check: c must lie in (0, 1/2)");
    const double eta_cap = c_floor / (1.0 - c_floor);
    for (double e : cfg.eta)
        if (e > eta_cap)
            throw DomainError("stability_gap_check: learning rate exceeds c/(1-c)");

    StabilityReport out;
    out.l_f = max_abs_slope(cfg, c_floor, 1.0 - c_floor);
    out.gap = max_first_round_gap(cfg, c_floor);

    const int T = cfg.horizon();
    double eta_tail = 0.0;
    for (int u = 2; u <= T; ++u) eta_tail += cfg.eta[static_cast<std::size_t>(u - 1)];
    out.bound = out.l_f * static_cast<double>(T - 1) / (16.0 * c_floor * c_floor * c_floor) *
                cfg.eta[0] * eta_tail;
    if (out.gap > out.bound)
        throw NumericError("stability_gap_check: gap exceeds the stable-regime bound");

    BanditConfig half = cfg;
    for (double& e : half.eta) e *= 0.5;
    const double half_gap = max_first_round_gap(half, c_floor);
    out.ratio_half_eta = out.gap / half_gap;
    return out;
}

}  // namespace attrib
