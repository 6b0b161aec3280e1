#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "attrib/dp.hpp"
#include "attrib/enumeration.hpp"
#include "attrib/errors.hpp"
#include "attrib/gallery.hpp"
#include "attrib/random_system.hpp"
#include "support.hpp"

using namespace attrib;
using attrib_test::for_each_history;
using attrib_test::freeze_future;
using attrib_test::sampled_prefix;
using attrib_test::sigmoid;

namespace {

// Brute-force conditional expectation of F(theta_{T+1}) given a prefix,
// written against the raw process definitions only.
double expected_terminal_oracle(const AdaptiveSystem& sys, const History& prefix) {
    double joint = 0.0;
    double mass = 0.0;
    for_each_history(sys, [&](const History& h, double p) {
        if (!std::equal(prefix.begin(), prefix.end(), h.begin())) return;
        mass += p;
        joint += p * sys.eval.value(replay_states(sys, WeightVector::ones(sys.horizon), h).back());
    });
    return joint / mass;
}

}  // namespace

TEST_CASE("psi on the sigmoid family is sigma(gamma eps)") {
    for (double gamma : {0.5, 1.0, 2.0}) {
        const AdaptiveSystem sys = insufficiency_family(gamma);
        for (double eps : {-1.0, -0.4, 0.0, 0.5, 1.0})
            CHECK(psi(sys, 1, eps, {0}) == doctest::Approx(sigmoid(gamma * eps)).epsilon(1e-14));
    }
}

TEST_CASE("psi at eps = 0 is the baseline conditional expectation") {
    for (std::uint64_t seed : {4u, 9u, 21u}) {
        const AdaptiveSystem sys = random_smooth_system(seed);
        for (int t = 1; t <= sys.horizon; ++t) {
            const History prefix = sampled_prefix(sys, t, seed * 13 + static_cast<unsigned>(t));
            CHECK(psi(sys, t, 0.0, prefix) ==
                  doctest::Approx(expected_terminal_oracle(sys, prefix)).epsilon(1e-12));
        }
    }
}

TEST_CASE("psi rejects zero-probability prefixes") {
    AdaptiveSystem sys = insufficiency_family(1.0);
    sys.cardinality[0] = 2;
    sys.kernel[0].mass = [](const State&, std::span<const int>, int z) {
        return z == 0 ? 1.0 : 0.0;
    };
    CHECK_THROWS_AS(psi(sys, 1, 0.0, {1}), ConditioningError);
}

TEST_CASE("replay influence vanishes on the sigmoid family") {
    const AdaptiveSystem sys = insufficiency_family(3.0);
    for (int z2 : {0, 1}) {
        CHECK(replay_influence(sys, 1, {0, z2}, Mode::analytic) == 0.0);
        CHECK(std::abs(replay_influence(sys, 1, {0, z2}, Mode::finite_difference)) <= 1e-10);
    }
}

TEST_CASE("replay influence: analytic and finite-difference routes agree") {
    for (std::uint64_t seed : {2u, 5u, 17u, 33u}) {
        const AdaptiveSystem sys = random_smooth_system(seed);
        const History log = sampled_prefix(sys, sys.horizon, seed + 1);
        for (int t = 1; t <= sys.horizon; ++t) {
            const double a = replay_influence(sys, t, log, Mode::analytic);
            const double f = replay_influence(sys, t, log, Mode::finite_difference);
            CHECK(std::abs(a - f) <= 1e-6 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("exogenous systems: interventional equals conditional expected replay") {
    RandomSystemOptions opt;
    opt.exogenous = true;
    for (std::uint64_t seed : {6u, 14u}) {
        const AdaptiveSystem sys = random_smooth_system(seed, opt);
        const int t = 1;
        const History prefix = sampled_prefix(sys, t, seed);
        const double cer = conditional_expected_replay(sys, t, prefix);
        CHECK(interventional_influence(sys, t, prefix, Mode::analytic) ==
              doctest::Approx(cer).epsilon(1e-10));
        CHECK(interventional_influence(sys, t, prefix, Mode::finite_difference) ==
              doctest::Approx(cer).epsilon(1e-6));
    }
}

TEST_CASE("deterministic future collapses conditional replay to the single log") {
    const AdaptiveSystem base = random_smooth_system(3);
    const History log = sampled_prefix(base, base.horizon, 44);
    const int t = 1;
    const AdaptiveSystem sys = freeze_future(base, t, log);
    const History prefix(log.begin(), log.begin() + t);
    CHECK(conditional_expected_replay(sys, t, prefix) ==
          doctest::Approx(replay_influence(sys, t, log)).epsilon(1e-12));
}

TEST_CASE("conditioning on the full history collapses intervention into replay") {
    // Post-t kernels pinned to the realized log: the interventional target
    // must equal the per-log replay influence.
    for (std::uint64_t seed : {12u, 29u}) {
        const AdaptiveSystem base = random_smooth_system(seed);
        const History log = sampled_prefix(base, base.horizon, seed + 7);
        const int t = 1;
        const AdaptiveSystem sys = freeze_future(base, t, log);
        const History prefix(log.begin(), log.begin() + t);
        CHECK(interventional_influence(sys, t, prefix, Mode::analytic) ==
              doctest::Approx(replay_influence(sys, t, log)).epsilon(1e-10));
    }
}

TEST_CASE("interventional influence on the sigmoid family is gamma / 4") {
    for (double gamma : {1.0, 2.0, -1.5}) {
        const AdaptiveSystem sys = insufficiency_family(gamma);
        CHECK(std::abs(interventional_influence(sys, 1, {0}, Mode::analytic) - gamma / 4.0) <=
              1e-12);
        CHECK(interventional_influence(sys, 1, {0}, Mode::finite_difference) ==
              doctest::Approx(gamma / 4.0).epsilon(1e-8));
    }
}

TEST_CASE("dot_q on the sigmoid family") {
    const double gamma = 2.0;
    const AdaptiveSystem sys = insufficiency_family(gamma);
    for (Mode mode : {Mode::analytic, Mode::finite_difference}) {
        const DotQ dq = dot_q(sys, 1, {0}, mode);
        CHECK(dq.deriv[1] == doctest::Approx(gamma / 4.0).epsilon(1e-8));
        CHECK(dq.deriv[0] == doctest::Approx(-gamma / 4.0).epsilon(1e-8));
        CHECK(std::abs(dq.sum()) <= 1e-10);
    }
}

TEST_CASE("dot_q centers to zero and matches across modes on random systems") {
    for (std::uint64_t seed : {1u, 8u, 15u, 40u}) {
        const AdaptiveSystem sys = random_smooth_system(seed);
        for (int t = 1; t <= sys.horizon; ++t) {
            const History prefix = sampled_prefix(sys, t, seed + static_cast<unsigned>(t));
            const DotQ analytic = dot_q(sys, t, prefix, Mode::analytic);
            const DotQ fd = dot_q(sys, t, prefix, Mode::finite_difference);
            CHECK(std::abs(analytic.sum()) <= 1e-10);
            CHECK(std::abs(fd.sum()) <= 1e-10);
            for (std::size_t i = 0; i < analytic.deriv.size(); ++i)
                CHECK(analytic.deriv[i] ==
                      doctest::Approx(fd.deriv[i]).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("dot_q is identically zero for exogenous systems") {
    RandomSystemOptions opt;
    opt.exogenous = true;
    const AdaptiveSystem sys = random_smooth_system(25, opt);
    const History prefix = sampled_prefix(sys, 1, 2);
    const DotQ dq = dot_q(sys, 1, prefix, Mode::analytic);
    for (double d : dq.deriv) CHECK(d == 0.0);
}

TEST_CASE("structural decomposition balances on random systems") {
    for (std::uint64_t seed : {7u, 18u, 23u, 31u}) {
        const AdaptiveSystem sys = random_smooth_system(seed);
        for (int t = 1; t <= sys.horizon; ++t) {
            const History prefix = sampled_prefix(sys, t, 3 * seed + static_cast<unsigned>(t));
            const Decomposition analytic = structural_decomposition(sys, t, prefix);
            CHECK(std::abs(analytic.residual) <= 1e-8);
            CHECK(analytic.future_law_term ==
                  doctest::Approx(analytic.future_law_term_centered).epsilon(1e-10).scale(1.0));
            const Decomposition fd =
                structural_decomposition(sys, t, prefix, Mode::finite_difference);
            CHECK(std::abs(fd.residual) <= 1e-6);
        }
    }
}

TEST_CASE("structural decomposition on the sigmoid family") {
    const AdaptiveSystem sys = insufficiency_family(2.0);
    const Decomposition d = structural_decomposition(sys, 1, {0});
    CHECK(d.replay_term == 0.0);
    CHECK(d.future_law_term == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(d.residual) <= 1e-12);
}

TEST_CASE("structural decomposition: exogenous future-law term vanishes") {
    RandomSystemOptions opt;
    opt.exogenous = true;
    const AdaptiveSystem sys = random_smooth_system(19, opt);
    const History prefix = sampled_prefix(sys, 2, 77);
    const Decomposition d = structural_decomposition(sys, 2, prefix);
    CHECK(d.future_law_term == 0.0);
}

TEST_CASE("slot influence averages the interventional influence over prefixes") {
    for (std::uint64_t seed : {5u, 26u}) {
        const AdaptiveSystem sys = random_smooth_system(seed);
        for (int t = 1; t <= sys.horizon; ++t) {
            std::vector<int> radices(sys.cardinality.begin(), sys.cardinality.begin() + t);
            const ContinuationSpace prefixes(radices);
            double avg = 0.0;
            for (std::size_t i = 0; i < prefixes.size(); ++i) {
                const History prefix = prefixes.decode(i);
                const double p = prefix_probability(sys, prefix);
                if (p > 0.0) avg += p * interventional_influence(sys, t, prefix);
            }
            CHECK(slot_influence(sys, t) == doctest::Approx(avg).epsilon(1e-6));
        }
    }
}

TEST_CASE("slot influence on the sigmoid family is gamma / 4") {
    const AdaptiveSystem sys = insufficiency_family(1.0);
    CHECK(slot_influence(sys, 1) == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("slot influence with t = T differentiates the final update only") {
    RandomSystemOptions opt;
    opt.horizon = 1;
    const AdaptiveSystem sys = random_smooth_system(50, opt);
    // Direct oracle: d/deps sum_z K(z) F(U(theta_1, z, 1+eps)) at 0.
    const double h = 1e-4;
    auto value = [&](double eps) {
        double acc = 0.0;
        for (int z = 0; z < sys.cardinality[0]; ++z)
            acc += sys.kernel[0].mass(sys.initial_state, {}, z) *
                   sys.eval.value(sys.update[0].value(sys.initial_state, z, 1.0 + eps));
        return acc;
    };
    const double oracle = (value(h) - value(-h)) / (2.0 * h);
    CHECK(slot_influence(sys, 1) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("influence report carries consistent finite effects") {
    const AdaptiveSystem sys = insufficiency_family(1.0);
    const std::vector<double> eps{-0.5, 0.5};
    const InfluenceReport report = influence_report(sys, 1, {0}, eps);
    CHECK(report.interventional_influence ==
          doctest::Approx(report.replay_influence_cond + report.future_law_correction)
              .epsilon(1e-10));
    // Finite interventional effect is sigma(gamma eps) - 1/2.
    CHECK(report.finite_effects.at(0.5).interventional ==
          doctest::Approx(sigmoid(0.5) - 0.5).epsilon(1e-12));
    // Replay along fixed logs never moves the terminal value here.
    CHECK(report.finite_effects.at(0.5).replay_expected == 0.0);
}
