#include "attrib/diagnostics.hpp"

#include <cmath>
#include <random>

namespace attrib {

namespace {

struct Probe {
    State theta;
    History prefix;
    int round;  // 1-based
};

std::vector<Probe> make_probes(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal(0.0, opt.state_scale);
    std::vector<Probe> probes;
    probes.reserve(static_cast<std::size_t>(opt.probes));
    for (int i = 0; i < opt.probes; ++i) {
        Probe p;
        p.theta = State(sys.dim());
        for (int k = 0; k < sys.dim(); ++k) p.theta(k) = normal(rng);
        p.round = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(sys.horizon));
        for (int s = 1; s < p.round; ++s)
            p.prefix.push_back(static_cast<int>(
                rng() % static_cast<std::uint64_t>(sys.cardinality[static_cast<std::size_t>(s - 1)])));
        probes.push_back(std::move(p));
    }
    return probes;
}

double rel_gap(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

double kernel_normalization_residual(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    double worst = 0.0;
    for (const Probe& p : make_probes(sys, opt)) {
        const auto k = static_cast<std::size_t>(p.round - 1);
        double total = 0.0;
        for (int z = 0; z < sys.cardinality[k]; ++z)
            total += sys.kernel[k].mass(p.theta, p.prefix, z);
        worst = std::max(worst, std::abs(total - 1.0));
    }
    return worst;
}

double kernel_gradient_sum_residual(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    double worst = 0.0;
    for (const Probe& p : make_probes(sys, opt)) {
        const auto k = static_cast<std::size_t>(p.round - 1);
        State total = State::Zero(sys.dim());
        for (int z = 0; z < sys.cardinality[k]; ++z)
            total += sys.kernel[k].grad_theta(p.theta, p.prefix, z);
        worst = std::max(worst, total.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

double kernel_gradient_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    double worst = 0.0;
    for (const Probe& p : make_probes(sys, opt)) {
        const auto k = static_cast<std::size_t>(p.round - 1);
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            const State grad = sys.kernel[k].grad_theta(p.theta, p.prefix, z);
            for (int i = 0; i < sys.dim(); ++i) {
                const double h = opt.fd_step * std::max(1.0, std::abs(p.theta(i)));
                State up = p.theta, down = p.theta;
                up(i) += h;
                down(i) -= h;
                const double fd = (sys.kernel[k].mass(up, p.prefix, z) -
                                   sys.kernel[k].mass(down, p.prefix, z)) /
                                  (2.0 * h);
                worst = std::max(worst, rel_gap(grad(i), fd));
            }
        }
    }
    return worst;
}

double update_jacobian_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    double worst = 0.0;
    std::mt19937_64 rng(opt.seed ^ 0x5eedu);
    for (const Probe& p : make_probes(sys, opt)) {
        const auto k = static_cast<std::size_t>(p.round - 1);
        const double w = 0.2 + 1.6 * uniform_from_bits(splitmix64(rng()));
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            const Matrix jt = sys.update[k].jac_theta(p.theta, z, w);
            for (int i = 0; i < sys.dim(); ++i) {
                const double h = opt.fd_step * std::max(1.0, std::abs(p.theta(i)));
                State up = p.theta, down = p.theta;
                up(i) += h;
                down(i) -= h;
                const State fd =
                    (sys.update[k].value(up, z, w) - sys.update[k].value(down, z, w)) / (2.0 * h);
                for (int r = 0; r < sys.dim(); ++r)
                    worst = std::max(worst, rel_gap(jt(r, i), fd(r)));
            }
            const State jw = sys.update[k].jac_w(p.theta, z, w);
            const double hw = opt.fd_step;
            const State fdw = (sys.update[k].value(p.theta, z, w + hw) -
                               sys.update[k].value(p.theta, z, w - hw)) /
                              (2.0 * hw);
            for (int r = 0; r < sys.dim(); ++r) worst = std::max(worst, rel_gap(jw(r), fdw(r)));
        }
    }
    return worst;
}

double eval_gradient_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    double worst = 0.0;
    for (const Probe& p : make_probes(sys, opt)) {
        const State grad = sys.eval.grad(p.theta);
        for (int i = 0; i < sys.dim(); ++i) {
            const double h = opt.fd_step * std::max(1.0, std::abs(p.theta(i)));
            State up = p.theta, down = p.theta;
            up(i) += h;
            down(i) -= h;
            const double fd = (sys.eval.value(up) - sys.eval.value(down)) / (2.0 * h);
            worst = std::max(worst, rel_gap(grad(i), fd));
        }
    }
    return worst;
}

bool kernels_state_independent(const AdaptiveSystem& sys, const ProbeOptions& opt) {
    std::mt19937_64 rng(opt.seed ^ 0xc01du);
    std::normal_distribution<double> normal(0.0, opt.state_scale);
    for (const Probe& p : make_probes(sys, opt)) {
        const auto k = static_cast<std::size_t>(p.round - 1);
        State other(sys.dim());
        for (int i = 0; i < sys.dim(); ++i) other(i) = normal(rng);
        for (int z = 0; z < sys.cardinality[k]; ++z) {
            const double a = sys.kernel[k].mass(p.theta, p.prefix, z);
            const double b = sys.kernel[k].mass(other, p.prefix, z);
            if (std::abs(a - b) > 1e-12) return false;
        }
    }
    return true;
}

}  // namespace attrib
