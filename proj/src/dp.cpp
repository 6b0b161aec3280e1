#include "attrib/dp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

double operator_norm(const Matrix& j) {
    if (j.rows() == 1 && j.cols() == 1) return std::abs(j(0, 0));
    Eigen::JacobiSVD<Matrix> svd(j);
    return svd.singularValues()(0);
}

}  // namespace

RecursionTree::RecursionTree(const AdaptiveSystem& sys, int t, const History& prefix)
    : sys_(&sys), t_(t), prefix_(prefix) {
    if (t < 1 || t > sys.horizon) throw DomainError("RecursionTree: round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError("RecursionTree: prefix length must equal the round");

    const auto states = replay_prefix_states(sys, WeightVector::ones(sys.horizon), prefix);

    Node root;
    root.s = t + 1;
    root.theta = states.back();
    root.gamma = sys.update[static_cast<std::size_t>(t - 1)].jac_w(states[static_cast<std::size_t>(t - 1)],
                                                                   prefix.back(), 1.0);
    nodes_.push_back(std::move(root));

    History path = prefix;
    std::function<void(std::size_t)> expand = [&](std::size_t idx) {
        const int s = nodes_[idx].s;
        if (s > sys.horizon) return;
        const auto k = static_cast<std::size_t>(s - 1);
        const State theta = nodes_[idx].theta;
        const State gamma = nodes_[idx].gamma;
        const double cond_prob = nodes_[idx].cond_prob;
        const int n = sys.cardinality[k];

        std::vector<double> mass(static_cast<std::size_t>(n));
        std::vector<State> kgrad(static_cast<std::size_t>(n));
        std::span<const int> ctx(path.data(), path.size());
        for (int z = 0; z < n; ++z) {
            mass[static_cast<std::size_t>(z)] = sys.kernel[k].mass(theta, ctx, z);
            kgrad[static_cast<std::size_t>(z)] = sys.kernel[k].grad_theta(theta, ctx, z);
        }

        const std::size_t first = nodes_.size();
        for (int z = 0; z < n; ++z) {
            Node child;
            child.s = s + 1;
            Matrix j = sys.update[k].jac_theta(theta, z, 1.0);
            child.theta = sys.update[k].value(theta, z, 1.0);
            if (!child.theta.allFinite())
                throw NumericError("non-finite replayed state at round " + std::to_string(s), s);
            child.gamma = j * gamma;
            child.jac_norm = operator_norm(j);
            child.cond_prob = cond_prob * mass[static_cast<std::size_t>(z)];
            nodes_.push_back(std::move(child));
        }
        nodes_[idx].first_child = static_cast<int>(first);
        nodes_[idx].mass = std::move(mass);
        nodes_[idx].kgrad = std::move(kgrad);

        for (int z = 0; z < n; ++z) {
            path.push_back(z);
            expand(first + static_cast<std::size_t>(z));
            path.pop_back();
        }
    };
    expand(0);

    // Backward pass. Children always sit after their parent, so one reverse
    // sweep resolves V, G, M, and Xi.
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& node = nodes_[i];
        if (node.first_child < 0) {
            node.V = sys.eval.value(node.theta);
            node.G = sys.eval.grad(node.theta).dot(node.gamma);
            node.M = node.G;
            node.Xi = 0.0;
            continue;
        }
        double v = 0.0, g_fixed = 0.0, g_shift = 0.0, m = 0.0;
        const auto first = static_cast<std::size_t>(node.first_child);
        for (std::size_t z = 0; z < node.mass.size(); ++z) {
            const Node& child = nodes_[first + z];
            v += node.mass[z] * child.V;
            g_fixed += node.mass[z] * child.G;
            m += node.mass[z] * child.M;
            g_shift += node.kgrad[z].dot(node.gamma) * child.V;
        }
        node.V = v;
        node.G = g_fixed + g_shift;
        node.M = m;
        double xi = 0.0;
        for (std::size_t z = 0; z < node.mass.size(); ++z)
            xi += node.kgrad[z].dot(node.gamma) * (nodes_[first + z].V - v);
        node.Xi = xi;
    }

    expected_xi_.assign(static_cast<std::size_t>(sys.horizon - t), 0.0);
    for (const Node& node : nodes_)
        if (node.first_child >= 0)
            expected_xi_[static_cast<std::size_t>(node.s - (t + 1))] += node.cond_prob * node.Xi;
}

double RecursionTree::interventional_influence() const { return nodes_[0].G; }
double RecursionTree::conditional_expected_replay() const { return nodes_[0].M; }
double RecursionTree::baseline_value() const { return nodes_[0].V; }
double RecursionTree::gap() const { return nodes_[0].G - nodes_[0].M; }

std::map<int, double> RecursionTree::expected_xi() const {
    std::map<int, double> out;
    for (std::size_t i = 0; i < expected_xi_.size(); ++i)
        out[t_ + 1 + static_cast<int>(i)] = expected_xi_[i];
    return out;
}

const RecursionTree::Node& RecursionTree::locate(std::span<const int> suffix) const {
    std::size_t idx = 0;
    for (int z : suffix) {
        const Node& node = nodes_[idx];
        if (node.first_child < 0 || z < 0 || z >= static_cast<int>(node.mass.size()))
            throw DomainError("RecursionTree: suffix leaves the continuation tree");
        idx = static_cast<std::size_t>(node.first_child) + static_cast<std::size_t>(z);
    }
    return nodes_[idx];
}

const State& RecursionTree::gamma(std::span<const int> suffix) const { return locate(suffix).gamma; }
double RecursionTree::value(std::span<const int> suffix) const { return locate(suffix).V; }
double RecursionTree::xi(std::span<const int> suffix) const { return locate(suffix).Xi; }
const State& RecursionTree::replayed_state(std::span<const int> suffix) const {
    return locate(suffix).theta;
}

double RecursionTree::score(std::span<const int> continuation) const {
    if (continuation.size() != static_cast<std::size_t>(sys_->horizon - t_))
        throw DomainError("RecursionTree::score: continuation length mismatch");
    double acc = 0.0;
    std::size_t idx = 0;
    for (int z : continuation) {
        const Node& node = nodes_[idx];
        const auto zi = static_cast<std::size_t>(z);
        if (z < 0 || zi >= node.mass.size())
            throw DomainError("RecursionTree::score: continuation index out of range");
        if (!(node.mass[zi] > 0.0)) return 0.0;
        acc += node.kgrad[zi].dot(node.gamma) / node.mass[zi];
        idx = static_cast<std::size_t>(node.first_child) + zi;
    }
    return acc;
}

double RecursionTree::score_centered_gap() const {
    const double f_root = sys_->eval.value(nodes_[0].theta);
    double total = 0.0;
    std::function<void(std::size_t, double)> walk = [&](std::size_t idx, double score_acc) {
        const Node& node = nodes_[idx];
        if (node.first_child < 0) {
            total += node.cond_prob * (node.V - f_root) * score_acc;
            return;
        }
        for (std::size_t z = 0; z < node.mass.size(); ++z) {
            if (!(node.mass[z] > 0.0)) continue;
            walk(static_cast<std::size_t>(node.first_child) + z,
                 score_acc + node.kgrad[z].dot(node.gamma) / node.mass[z]);
        }
    };
    walk(0, 0.0);
    return total;
}

double RecursionTree::depth_influence(int L) const {
    if (L < 0 || L > sys_->horizon - t_)
        throw DomainError("RecursionTree::depth_influence: depth out of range");
    double out = nodes_[0].M;
    for (int i = 0; i < L; ++i) out += expected_xi_[static_cast<std::size_t>(i)];
    return out;
}

double RecursionTree::tv_sensitivity(const Node& node, bool& probed) const {
    const int d = sys_->dim();
    auto half_l1 = [&](const State& u) {
        double acc = 0.0;
        for (const State& g : node.kgrad) acc += std::abs(g.dot(u));
        return 0.5 * acc;
    };
    if (d == 1) {
        double acc = 0.0;
        for (const State& g : node.kgrad) acc += std::abs(g(0));
        return 0.5 * acc;
    }
    double best = 0.0;
    // The realized sensitivity direction is always probed, so the reported
    // supremum dominates the per-round gap term it bounds.
    if (node.gamma.norm() > 0.0) best = half_l1(node.gamma.normalized());
    if (d == 2) {
        auto at_angle = [&](double phi) {
            State u(2);
            u << std::cos(phi), std::sin(phi);
            return half_l1(u);
        };
        const int grid = 4096;
        double best_phi = 0.0;
        for (int i = 0; i < grid; ++i) {
            const double phi = std::numbers::pi * static_cast<double>(i) / grid;
            const double v = at_angle(phi);
            if (v > best) {
                best = v;
                best_phi = phi;
            }
        }
        const double delta = std::numbers::pi / grid;
        best = std::max(best, golden_section_max(at_angle, best_phi - delta, best_phi + delta));
        return best;
    }
    probed = true;
    std::mt19937_64 rng(0x7ae3u);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 10000; ++i) {
        State u(d);
        for (int k = 0; k < d; ++k) u(k) = normal(rng);
        const double n = u.norm();
        if (n == 0.0) continue;
        best = std::max(best, half_l1(u / n));
    }
    return best;
}

TruncationBounds RecursionTree::truncation_bounds(int L) const {
    const int T = sys_->horizon;
    if (L < 0 || L > T - t_)
        throw DomainError("RecursionTree::truncation_bounds: depth out of range");

    TruncationBounds out;
    for (int s = t_ + L + 1; s <= T; ++s)
        out.exact_tail += expected_xi_[static_cast<std::size_t>(s - (t_ + 1))];

    // Per-round empirical maxima over the enumerated tree.
    std::vector<double> l_bar(static_cast<std::size_t>(T - t_), 0.0);
    std::vector<double> d_bar(static_cast<std::size_t>(T - t_), 0.0);
    std::vector<double> rho_bar(static_cast<std::size_t>(T - t_), 0.0);

    for (const Node& node : nodes_) {
        if (node.s > t_ + 1)
            rho_bar[static_cast<std::size_t>(node.s - 1 - (t_ + 1))] =
                std::max(rho_bar[static_cast<std::size_t>(node.s - 1 - (t_ + 1))], node.jac_norm);
        if (node.first_child < 0) continue;
        const auto slot = static_cast<std::size_t>(node.s - (t_ + 1));
        double vmax = -std::numeric_limits<double>::infinity();
        double vmin = std::numeric_limits<double>::infinity();
        for (std::size_t z = 0; z < node.mass.size(); ++z) {
            const double v = nodes_[static_cast<std::size_t>(node.first_child) + z].V;
            vmax = std::max(vmax, v);
            vmin = std::min(vmin, v);
        }
        const double osc = vmax - vmin;
        const double tv = tv_sensitivity(node, out.tv_probed);
        l_bar[slot] = std::max(l_bar[slot], tv);
        d_bar[slot] = std::max(d_bar[slot], osc);
        if (node.s >= t_ + L + 1)
            out.oscillation_bound += node.cond_prob * tv * node.gamma.norm() * osc;
    }

    const double b_bar = nodes_[0].gamma.norm();
    double rho_prod = 1.0;
    for (int s = t_ + 1; s <= T; ++s) {
        if (s > t_ + L) out.uniform_bound += l_bar[static_cast<std::size_t>(s - (t_ + 1))] *
                                             d_bar[static_cast<std::size_t>(s - (t_ + 1))] * rho_prod;
        if (s < T) rho_prod *= rho_bar[static_cast<std::size_t>(s - t_)];
    }
    out.uniform_bound *= b_bar;
    return out;
}

double influence_dp(const AdaptiveSystem& sys, int t, const History& prefix) {
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError("influence_dp: prefix has zero baseline probability");
    return RecursionTree(sys, t, prefix).interventional_influence();
}

std::map<int, double> stagewise_xi(const AdaptiveSystem& sys, int t, const History& prefix) {
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError("stagewise_xi: prefix has zero baseline probability");
    return RecursionTree(sys, t, prefix).expected_xi();
}

double future_law_score(const AdaptiveSystem& sys, int t, const History& log) {
    if (log.size() != static_cast<std::size_t>(sys.horizon))
        throw DomainError("future_law_score: log must cover the full horizon");
    if (t < 1 || t > sys.horizon) throw DomainError("future_law_score: round out of range");

    const auto states = replay_states(sys, WeightVector::ones(sys.horizon), log);
    State gamma = sys.update[static_cast<std::size_t>(t - 1)].jac_w(
        states[static_cast<std::size_t>(t - 1)], log[static_cast<std::size_t>(t - 1)], 1.0);
    double acc = 0.0;
    for (int s = t + 1; s <= sys.horizon; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        std::span<const int> ctx(log.data(), k);
        const double m = sys.kernel[k].mass(states[k], ctx, log[k]);
        if (!(m > 0.0)) return 0.0;
        acc += sys.kernel[k].grad_theta(states[k], ctx, log[k]).dot(gamma) / m;
        if (s < sys.horizon)
            gamma = sys.update[k].jac_theta(states[k], log[k], 1.0) * gamma;
    }
    return acc;
}

double depth_L_target(const AdaptiveSystem& sys, int t, double eps, const History& prefix,
                      int L) {
    if (t < 1 || t > sys.horizon) throw DomainError("depth_L_target: round out of range");
    if (prefix.size() != static_cast<std::size_t>(t))
        throw DomainError("depth_L_target: prefix length must equal the round");
    if (L < 0 || L > sys.horizon - t) throw DomainError("depth_L_target: depth out of range");
    if (prefix_probability(sys, prefix) <= 0.0)
        throw ConditioningError("depth_L_target: prefix has zero baseline probability");

    const auto w = one_coordinate_weights(sys.horizon, t, eps, sys.weight_cap);
    const State theta_pert = replay_prefix_states(sys, w, prefix).back();
    const State theta_base =
        replay_prefix_states(sys, WeightVector::ones(sys.horizon), prefix).back();

    std::vector<double> contributions;
    History path = prefix;
    std::function<void(int, const State&, const State&, double)> walk =
        [&](int s, const State& pert, const State& base, double prob) {
            if (s > sys.horizon) {
                contributions.push_back(prob * sys.eval.value(pert));
                return;
            }
            const auto k = static_cast<std::size_t>(s - 1);
            const State& law_state = (s <= t + L) ? pert : base;
            for (int z = 0; z < sys.cardinality[k]; ++z) {
                // Rebuilt per use; the recursion below may grow the path.
                const double m =
                    sys.kernel[k].mass(law_state, std::span<const int>(path.data(), k), z);
                path.push_back(z);
                walk(s + 1, sys.update[k].value(pert, z, 1.0), sys.update[k].value(base, z, 1.0),
                     prob * m);
                path.pop_back();
            }
        };
    walk(t + 1, theta_pert, theta_base, 1.0);
    return pairwise_sum(contributions);
}

double depth_L_influence(const AdaptiveSystem& sys, int t, const History& prefix, int L,
                         Mode mode, const FdOptions& fd) {
    if (mode == Mode::analytic) {
        if (prefix_probability(sys, prefix) <= 0.0)
            throw ConditioningError("depth_L_influence: prefix has zero baseline probability");
        return RecursionTree(sys, t, prefix).depth_influence(L);
    }
    return eps_derivative([&](double e) { return depth_L_target(sys, t, e, prefix, L); }, -1.0,
                          sys.weight_cap, fd);
}

TruncationBounds truncation_bounds(const AdaptiveSystem& sys, int t, const History& prefix,
                                   int L) {
    return RecursionTree(sys, t, prefix).truncation_bounds(L);
}

}  // namespace attrib
