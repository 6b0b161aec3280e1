// Acceptance suite: one pass/fail line per criterion, all tolerances pinned
// in code. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "attrib/action_only.hpp"
#include "attrib/bandit.hpp"
#include "attrib/dp.hpp"
#include "attrib/enumeration.hpp"
#include "attrib/gallery.hpp"
#include "attrib/random_system.hpp"
#include "support.hpp"

using namespace attrib;
using attrib_test::sampled_prefix;

namespace {

struct Criterion {
    int id;
    std::string summary;
    bool pass = true;
    double worst = 0.0;  // largest residual relative to its tolerance
    std::string detail;
    double seconds = 0.0;

    void check(bool ok, double residual, double tolerance, const std::string& what) {
        if (tolerance > 0.0) worst = std::max(worst, residual / tolerance);
        if (!ok) {
            pass = false;
            if (detail.empty())
                detail = what + " (residual " + std::to_string(residual) + ", tol " +
                         std::to_string(tolerance) + ")";
        }
    }

    void require(double residual, double tolerance, const std::string& what) {
        check(residual <= tolerance, residual, tolerance, what);
    }

    void expect(bool ok, const std::string& what) { check(ok, ok ? 0.0 : 1.0, 1.0, what); }
};

struct Probe {
    AdaptiveSystem sys;
    int t;
    History prefix;
};

// The shared population for the property criteria: 100 seeded random smooth
// systems with T <= 4, n_t <= 3, d <= 2.
std::vector<Probe> property_population() {
    std::vector<Probe> probes;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        RandomSystemOptions opt;
        opt.horizon = 2 + static_cast<int>(seed % 3);  // 2..4
        opt.dim = 1 + static_cast<int>(seed % 2);      // 1..2
        opt.max_cardinality = 3;
        Probe probe{random_smooth_system(seed, opt), 0, {}};
        probe.t = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(opt.horizon));
        probe.prefix = sampled_prefix(probe.sys, probe.t, seed * 31 + 7);
        probes.push_back(std::move(probe));
    }
    return probes;
}

void criterion_1_insufficiency_certificate(Criterion& c) {
    const InsufficiencyCertificate cert = insufficiency_certificate(1.0, 2.0, 0.5);
    c.require(cert.oracle_deviation, 0.0, "replay oracles must match exactly");
    for (const ReplayOracle* oracle : {&cert.oracle_a, &cert.oracle_b}) {
        c.expect(oracle->baseline_law[0] == 0.5 && oracle->baseline_law[1] == 0.5,
                 "baseline law must be exactly (1/2, 1/2)");
        for (std::size_t i = 0; i < oracle->response.size(); ++i)
            for (double v : oracle->response[i])
                c.expect(v == oracle->response[i][0], "response curves must be constant");
    }
    c.require(std::abs(cert.influence_a - 0.25), 1e-12, "influence at gamma=1");
    c.require(std::abs(cert.influence_b - 0.50), 1e-12, "influence at gamma=2");
    c.expect(std::abs(cert.psi_a - cert.psi_b) > 0.0, "perturbed targets must differ");
}

void criterion_2_structural_decomposition(Criterion& c, const std::vector<Probe>& probes) {
    for (const Probe& p : probes) {
        const Decomposition analytic = structural_decomposition(p.sys, p.t, p.prefix);
        c.require(std::abs(analytic.residual), 1e-8, "analytic decomposition residual");
        const Decomposition fd =
            structural_decomposition(p.sys, p.t, p.prefix, Mode::finite_difference);
        c.require(std::abs(fd.residual), 1e-6, "finite-difference decomposition residual");
        c.require(std::abs(dot_q(p.sys, p.t, p.prefix).sum()), 1e-10, "dotQ centering");
    }
}

void criterion_3_dp_exactness(Criterion& c, const std::vector<Probe>& probes) {
    for (const Probe& p : probes) {
        const double dp = influence_dp(p.sys, p.t, p.prefix);
        const double fd = interventional_influence(p.sys, p.t, p.prefix,
                                                   Mode::finite_difference);
        c.require(std::abs(dp - fd), 1e-6, "dp vs central difference of psi");

        double xi_sum = 0.0;
        for (const auto& [round, value] : stagewise_xi(p.sys, p.t, p.prefix)) xi_sum += value;
        const double gap = dp - conditional_expected_replay(p.sys, p.t, p.prefix);
        c.require(std::abs(xi_sum - gap), 1e-8, "stagewise sum vs gap");
    }
}

void criterion_4_depth_interpolation(Criterion& c, const std::vector<Probe>& probes) {
    FdOptions refined;
    refined.richardson = true;
    for (const Probe& p : probes) {
        const int top = p.sys.horizon - p.t;
        const double cer = conditional_expected_replay(p.sys, p.t, p.prefix);
        const double full = influence_dp(p.sys, p.t, p.prefix);
        c.require(std::abs(depth_L_influence(p.sys, p.t, p.prefix, 0) - cer), 1e-8,
                  "L = 0 endpoint");
        c.require(std::abs(depth_L_influence(p.sys, p.t, p.prefix, top) - full), 1e-8,
                  "L = T - t endpoint");
        for (int L = 0; L <= top; ++L) {
            const double analytic = depth_L_influence(p.sys, p.t, p.prefix, L);
            const double fd = depth_L_influence(p.sys, p.t, p.prefix, L,
                                                Mode::finite_difference, refined);
            c.require(std::abs(analytic - fd), 1e-8, "depth-L identity residual");
            const TruncationBounds b = truncation_bounds(p.sys, p.t, p.prefix, L);
            c.expect(std::abs(b.exact_tail) <= b.oscillation_bound + 1e-14,
                     "exact tail within oscillation bound");
            c.expect(b.oscillation_bound <= b.uniform_bound + 1e-14,
                     "oscillation bound within uniform bound");
        }
    }
}

void criterion_5_action_only(Criterion& c) {
    // Exact change of measure and importance sampling across seeds and eps.
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ActionOnlySystem aos = random_action_only_system(seed);
        const AdaptiveSystem sys = aos.to_adaptive();
        const History prefix = sampled_prefix(sys, 1, seed + 3);
        const FutureLaw base = conditional_future_law(sys, 1, 0.0, prefix);
        for (double eps : {-1.0, -0.4, 0.5, 1.0}) {
            const FutureLaw pert = conditional_future_law(sys, 1, eps, prefix);
            for (std::size_t i = 0; i < base.prob.size(); ++i) {
                if (!(base.prob[i] > 0.0)) continue;
                const double lambda = policy_ratio(aos, 1, eps, prefix, base.space.decode(i));
                c.require(std::abs(pert.prob[i] - lambda * base.prob[i]), 1e-12,
                          "change of measure");
            }
            c.require(std::abs(psi_importance(aos, 1, eps, prefix) - psi(sys, 1, eps, prefix)),
                      1e-10, "importance sampling vs enumeration");
        }
    }

    // Monte Carlo coverage at n = 1e4 over 100 seeds.
    const ActionOnlySystem aos = random_action_only_system(77);
    const History prefix = sampled_prefix(aos.to_adaptive(), 1, 5);
    const double exact = psi_importance(aos, 1, 0.4, prefix);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const McEstimate est = mc_psi(aos, 1, 0.4, prefix, 10000, seed);
        if (std::abs(est.estimate - exact) <= 4.0 * est.se) ++hits;
    }
    c.expect(hits >= 95, "MC coverage below 95/100 (got " + std::to_string(hits) + ")");
}

void criterion_6_negative_frontier(Criterion& c) {
    for (FrontierKind kind : {FrontierKind::reward, FrontierKind::context}) {
        const auto [a, b] = negative_frontier_pair(kind, 1.0, 2.0);
        const auto space = a.continuation_space(0);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const History h = space.decode(i);
            const double pa = path_probability(a, WeightVector::ones(2), h);
            const double pb = path_probability(b, WeightVector::ones(2), h);
            c.expect(pa == pb, "baseline path laws must be bit-equal");
        }
        c.require(std::abs(influence_dp(a, 1, {0}) - 0.25), 1e-12, "frontier influence gamma=1");
        c.require(std::abs(influence_dp(b, 1, {0}) - 0.50), 1e-12, "frontier influence gamma=2");
    }
}

void criterion_7_bandit_closed_forms(Criterion& c) {
    BanditConfig calib;
    calib.q = 0.25;
    calib.eta = {std::log(3.0) / 4.0, 2.0};
    calib.mu0 = 0.95;
    calib.mu1 = 1.0;
    c.require(std::abs(intermediate_policy(calib, 0.0) - 0.5), 1e-12, "p2 at the calibration");
    c.require(std::abs(intermediate_policy_sensitivity(calib) - std::log(3.0) / 4.0), 1e-12,
              "first-round sensitivity");

    for (double q : {0.25, 0.4}) {
        for (double eta2 : {0.7, 2.0}) {
            for (double mu0 : {0.3, 0.95}) {
                BanditConfig cfg;
                cfg.q = q;
                cfg.eta = {0.3, eta2};
                cfg.mu0 = mu0;
                cfg.mu1 = 0.85;
                const TwoStepTargets ts = two_step_targets(cfg);
                const AdaptiveSystem sys = bandit_system(cfg).to_adaptive();
                c.require(std::abs(ts.interventional - influence_dp(sys, 1, {3})), 1e-10,
                          "closed-form interventional vs enumeration");
                c.require(std::abs(ts.replay - conditional_expected_replay(sys, 1, {3})),
                          1e-10, "closed-form replay vs enumeration");
            }
        }
    }

    const AdaptiveSystem sys = bandit_system(calib).to_adaptive();
    const double replay_cond = conditional_expected_replay(sys, 1, {3});
    const double interventional = influence_dp(sys, 1, {3});
    c.expect(replay_cond < 0.0, "conditional expected replay must be negative");
    c.expect(interventional > 0.0, "interventional influence must be positive");
    const auto witness = realized_sign_flip(calib);
    c.expect(witness.has_value() && witness->replay_influence < 0.0 &&
                 witness->probability > 0.0,
             "realized sign-flip witness");
}

void criterion_8_stable_regime(Criterion& c) {
    for (double eta : {0.02, 0.05, 0.1}) {
        for (int T : {2, 3}) {
            BanditConfig cfg;
            cfg.q = 0.5;
            cfg.eta.assign(static_cast<std::size_t>(T), eta);
            cfg.mu0 = 0.45;
            cfg.mu1 = 0.55;
            const StabilityReport report = stability_gap_check(cfg, 0.3);
            c.expect(report.gap <= report.bound, "gap within the stable-regime bound");
            c.expect(report.ratio_half_eta >= 2.0 && report.ratio_half_eta <= 8.0,
                     "halving rates must shrink the gap by a factor in [2, 8] (got " +
                         std::to_string(report.ratio_half_eta) + ")");
        }
    }
}

void criterion_9_exogenous_collapse(Criterion& c) {
    RandomSystemOptions opt;
    opt.exogenous = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const AdaptiveSystem sys = random_smooth_system(seed + 500, opt);
        const History prefix = sampled_prefix(sys, 1, seed);
        const Decomposition d = structural_decomposition(sys, 1, prefix);
        c.require(std::abs(d.future_law_term), 1e-12, "future-law correction must vanish");
        c.require(std::abs(influence_dp(sys, 1, prefix) -
                           conditional_expected_replay(sys, 1, prefix)),
                  1e-10, "interventional vs conditional expected replay");
        const ReplayOracle oracle = replay_oracle(sys, 1, prefix, default_oracle_grid());
        c.require(std::abs(oracle_reconstructed_influence(oracle) -
                           influence_dp(sys, 1, prefix)),
                  1e-6, "oracle-only reconstruction");
    }
}

}  // namespace

int main() {
    std::vector<Criterion> criteria;
    const auto timed = [&](int id, const std::string& summary, double limit_seconds,
                           auto&& body) {
        Criterion c{id, summary};
        const auto start = std::chrono::steady_clock::now();
        body(c);
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
        if (limit_seconds > 0.0 && c.seconds > limit_seconds) {
            c.pass = false;
            if (c.detail.empty())
                c.detail = "runtime " + std::to_string(c.seconds) + " s exceeds " +
                           std::to_string(limit_seconds) + " s";
        }
        criteria.push_back(std::move(c));
    };

    const std::vector<Probe> probes = property_population();

    timed(1, "insufficiency certificate: shared oracles, gamma/4 influences", 1.0,
          [&](Criterion& c) { criterion_1_insufficiency_certificate(c); });
    timed(2, "structural decomposition on 100 random systems", 30.0,
          [&](Criterion& c) { criterion_2_structural_decomposition(c, probes); });
    timed(3, "dp exactness and stagewise completeness", 0.0,
          [&](Criterion& c) { criterion_3_dp_exactness(c, probes); });
    timed(4, "depth-L interpolation, identity, and bound chain", 0.0,
          [&](Criterion& c) { criterion_4_depth_interpolation(c, probes); });
    timed(5, "action-only change of measure, IS equality, MC coverage", 0.0,
          [&](Criterion& c) { criterion_5_action_only(c); });
    timed(6, "negative frontier: bit-equal laws, diverging influences", 0.0,
          [&](Criterion& c) { criterion_6_negative_frontier(c); });
    timed(7, "bandit closed forms and strong separation", 1.0,
          [&](Criterion& c) { criterion_7_bandit_closed_forms(c); });
    timed(8, "stable small-step regime bound and quadratic signature", 10.0,
          [&](Criterion& c) { criterion_8_stable_regime(c); });
    timed(9, "exogenous collapse and oracle sufficiency", 0.0,
          [&](Criterion& c) { criterion_9_exogenous_collapse(c); });

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!c.pass) ++failures;
        std::printf("criterion %d %s: %s (worst residual %.2e of tolerance, %.2f s)%s%s\n",
                    c.id, c.pass ? "PASS" : "FAIL", c.summary.c_str(), c.worst, c.seconds,
                    c.detail.empty() ? "" : " -- ", c.detail.c_str());
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
    return failures;
}
