#include "attrib/random_system.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

double prefix_feature(std::span<const int> prefix, int prev_cardinality) {
    if (prefix.empty()) return 0.0;
    return static_cast<double>(prefix.back() + 1) / static_cast<double>(prev_cardinality + 1);
}

// Softmax kernel over one round's interactions with logits
// alpha_z + beta_z . theta + gamma_z * feature(prefix).
struct SoftmaxKernel {
    std::vector<double> alpha;
    std::vector<State> beta;
    std::vector<double> gamma;
    int prev_cardinality = 1;

    std::vector<double> probs(const State& theta, std::span<const int> prefix) const {
        const double feat = prefix_feature(prefix, prev_cardinality);
        std::vector<double> logits(alpha.size());
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t z = 0; z < alpha.size(); ++z) {
            logits[z] = alpha[z] + beta[z].dot(theta) + gamma[z] * feat;
            max_logit = std::max(max_logit, logits[z]);
        }
        double norm = 0.0;
        for (double& l : logits) {
            l = std::exp(l - max_logit);
            norm += l;
        }
        for (double& l : logits) l /= norm;
        return logits;
    }
};

// Update theta' = theta + w * (u_z + C_z tanh(W theta)), elementwise tanh.
struct TanhUpdate {
    std::vector<State> u;
    std::vector<Matrix> c;
    Matrix w_mat;

    State drift(const State& theta, int z) const {
        return u[static_cast<std::size_t>(z)] +
               c[static_cast<std::size_t>(z)] * (w_mat * theta).array().tanh().matrix();
    }
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

State random_vec(std::mt19937_64& rng, int d, double scale) {
    State v(d);
    for (int i = 0; i < d; ++i) v(i) = uniform(rng, -scale, scale);
    return v;
}

Matrix random_mat(std::mt19937_64& rng, int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, -scale, scale);
    return m;
}

RoundUpdate make_update(std::shared_ptr<const TanhUpdate> up) {
    RoundUpdate out;
    out.value = [up](const State& theta, int z, double w) {
        return State(theta + w * up->drift(theta, z));
    };
    out.jac_theta = [up](const State& theta, int z, double w) {
        const State inner = up->w_mat * theta;
        const State sech2 = (1.0 - inner.array().tanh().square()).matrix();
        return Matrix(Matrix::Identity(theta.size(), theta.size()) +
                      w * up->c[static_cast<std::size_t>(z)] * sech2.asDiagonal() * up->w_mat);
    };
    out.jac_w = [up](const State& theta, int z, double) { return up->drift(theta, z); };
    return out;
}

Evaluation make_quadratic_eval(std::mt19937_64& rng, int d) {
    const State f = random_vec(rng, d, 1.0);
    Matrix s = random_mat(rng, d, d, 0.3);
    s = Matrix(0.5 * (s + s.transpose()));
    Evaluation eval;
    eval.value = [f, s](const State& theta) {
        return f.dot(theta) + 0.5 * theta.dot(s * theta);
    };
    eval.grad = [f, s](const State& theta) { return State(f + s * theta); };
    return eval;
}

}  // namespace

AdaptiveSystem random_smooth_system(std::uint64_t seed, const RandomSystemOptions& opt) {
    if (opt.horizon < 1 || opt.dim < 1 || opt.max_cardinality < 1)
        throw DomainError("random_smooth_system: invalid options");
    std::mt19937_64 rng(seed);

    AdaptiveSystem sys;
    sys.horizon = opt.horizon;
    sys.weight_cap = 1.0;
    sys.initial_state = random_vec(rng, opt.dim, 0.5);

    std::uniform_int_distribution<int> card(1, opt.max_cardinality);
    sys.cardinality.resize(static_cast<std::size_t>(opt.horizon));
    for (int& n : sys.cardinality) n = card(rng);
    if (opt.max_cardinality > 1) {
        bool branching = false;
        for (int n : sys.cardinality) branching |= n > 1;
        if (!branching) sys.cardinality.back() = 2;
    }

    sys.update.resize(static_cast<std::size_t>(opt.horizon));
    sys.kernel.resize(static_cast<std::size_t>(opt.horizon));
    for (int s = 1; s <= opt.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        const int n = sys.cardinality[k];

        auto kern = std::make_shared<SoftmaxKernel>();
        kern->prev_cardinality = (s == 1) ? 1 : sys.cardinality[k - 1];
        for (int z = 0; z < n; ++z) {
            kern->alpha.push_back(uniform(rng, -1.0, 1.0));
            kern->beta.push_back(opt.exogenous ? State(State::Zero(opt.dim))
                                               : random_vec(rng, opt.dim, 0.8));
            kern->gamma.push_back(uniform(rng, -0.5, 0.5));
        }
        sys.kernel[k].mass = [kern](const State& theta, std::span<const int> prefix, int z) {
            return kern->probs(theta, prefix)[static_cast<std::size_t>(z)];
        };
        sys.kernel[k].grad_theta = [kern](const State& theta, std::span<const int> prefix,
                                          int z) {
            const auto p = kern->probs(theta, prefix);
            State mean = State::Zero(theta.size());
            for (std::size_t y = 0; y < p.size(); ++y) mean += p[y] * kern->beta[y];
            return State(p[static_cast<std::size_t>(z)] *
                         (kern->beta[static_cast<std::size_t>(z)] - mean));
        };

        auto up = std::make_shared<TanhUpdate>();
        for (int z = 0; z < n; ++z) {
            up->u.push_back(random_vec(rng, opt.dim, 0.5));
            up->c.push_back(random_mat(rng, opt.dim, opt.dim, 0.3));
        }
        up->w_mat = random_mat(rng, opt.dim, opt.dim, 0.5);
        sys.update[k] = make_update(std::move(up));
    }

    sys.eval = make_quadratic_eval(rng, opt.dim);
    return sys;
}

ActionOnlySystem random_action_only_system(std::uint64_t seed,
                                           const RandomActionOnlyOptions& opt) {
    if (opt.horizon < 1 || opt.dim < 1)
        throw DomainError("random_action_only_system: invalid options");
    std::mt19937_64 rng(seed);

    ActionOnlySystem aos;
    aos.horizon = opt.horizon;
    aos.weight_cap = 1.0;
    aos.initial_state = random_vec(rng, opt.dim, 0.5);

    std::uniform_int_distribution<int> ctx_count(1, 2);
    aos.rounds.resize(static_cast<std::size_t>(opt.horizon));
    int prev_card = 1;
    for (auto& round : aos.rounds) {
        round.num_contexts = ctx_count(rng);
        round.num_actions = 2;
        round.num_rewards = 2;

        std::vector<double> cw, ccoef;
        for (int x = 0; x < round.num_contexts; ++x) {
            cw.push_back(uniform(rng, -1.0, 1.0));
            ccoef.push_back(uniform(rng, -0.5, 0.5));
        }
        round.context_mass = [cw, ccoef, prev_card](std::span<const int> prefix, int x) {
            const double feat = prefix_feature(prefix, prev_card);
            double norm = 0.0;
            for (std::size_t y = 0; y < cw.size(); ++y) norm += std::exp(cw[y] + ccoef[y] * feat);
            return std::exp(cw[static_cast<std::size_t>(x)] +
                            ccoef[static_cast<std::size_t>(x)] * feat) /
                   norm;
        };

        std::vector<double> qr;  // reward-1 probability per (x, a)
        for (int i = 0; i < round.num_contexts * round.num_actions; ++i)
            qr.push_back(uniform(rng, 0.2, 0.8));
        const int na = round.num_actions;
        round.reward_mass = [qr, na](std::span<const int>, int x, int a, int r) {
            const double p1 = qr[static_cast<std::size_t>(x * na + a)];
            return r == 1 ? p1 : 1.0 - p1;
        };

        prev_card = round.num_contexts * round.num_actions * round.num_rewards;
    }

    // Shared softmax policy over two actions with per-context features.
    const int max_contexts = 2;
    std::vector<State> phi;  // indexed by x * 2 + a
    for (int i = 0; i < max_contexts * 2; ++i) phi.push_back(random_vec(rng, opt.dim, 0.8));
    aos.policy.prob = [phi](const State& theta, int x, int a) {
        const double l0 = phi[static_cast<std::size_t>(x * 2)].dot(theta);
        const double l1 = phi[static_cast<std::size_t>(x * 2 + 1)].dot(theta);
        const double m = std::max(l0, l1);
        const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        return (a == 1 ? e1 : e0) / (e0 + e1);
    };
    aos.policy.grad = [phi, pol = aos.policy.prob](const State& theta, int x, int a) {
        const double p1 = pol(theta, x, 1);
        const State mean = (1.0 - p1) * phi[static_cast<std::size_t>(x * 2)] +
                           p1 * phi[static_cast<std::size_t>(x * 2 + 1)];
        const double pa = a == 1 ? p1 : 1.0 - p1;
        return State(pa * (phi[static_cast<std::size_t>(x * 2 + a)] - mean));
    };

    aos.update.resize(static_cast<std::size_t>(opt.horizon));
    for (int s = 1; s <= opt.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        const int n = aos.cardinality(s);
        auto up = std::make_shared<TanhUpdate>();
        for (int z = 0; z < n; ++z) {
            up->u.push_back(random_vec(rng, opt.dim, 0.5));
            up->c.push_back(random_mat(rng, opt.dim, opt.dim, 0.3));
        }
        up->w_mat = random_mat(rng, opt.dim, opt.dim, 0.5);
        aos.update[k] = make_update(std::move(up));
    }

    aos.eval = make_quadratic_eval(rng, opt.dim);
    return aos;
}

}  // namespace attrib
