#pragma once

#include <cstdint>

#include "attrib/system.hpp"

namespace attrib {

// Finite-difference and normalization probes of a system's supplied analytic
// derivatives. These are test oracles: the library itself never substitutes
// finite differences for the environment's gradients.
struct ProbeOptions {
    int probes = 25;
    std::uint64_t seed = 0xd1a6u;
    double state_scale = 1.0;
    double fd_step = 1e-4;  // scaled per coordinate by max(1, |theta_i|)
};

// max |sum_z mass - 1| over probed (theta, prefix) pairs.
double kernel_normalization_residual(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

// max-norm of sum_z grad_theta over probed pairs (should vanish).
double kernel_gradient_sum_residual(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

// Relative disagreement between analytic kernel gradients and central
// differences of the masses.
double kernel_gradient_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

// Relative disagreement of the update Jacobians (state and weight) with
// central differences of the update values.
double update_jacobian_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

// Relative disagreement of the evaluation gradient with central differences.
double eval_gradient_fd_residual(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

// True when every kernel mass agrees at two random states on every probe, the
// operational test for an exogenous (state-independent) environment.
bool kernels_state_independent(const AdaptiveSystem& sys, const ProbeOptions& opt = {});

}  // namespace attrib
