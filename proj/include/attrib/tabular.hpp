#pragma once

#include <json.hpp>

#include "attrib/system.hpp"

namespace attrib {

// Builds a one-dimensional system from explicit tables. The learner state is
// snapped to the nearest point of a declared finite grid before any table
// lookup, so kernels are piecewise constant in the state (their analytic
// gradients are zero) and the weight enters each update linearly:
//
//   U(theta, z, w) = next[grid(theta)][z] + (w - 1) * weight_slope[grid(theta)][z]
//
// Expected shape:
//   {"state_grid": [...], "initial_state": x, "weight_cap": rho,
//    "rounds": [{"cardinality": n,
//                "kernel": [[p per z] per grid point],
//                "next": [[theta' per z] per grid point],
//                "weight_slope": [[slope per z] per grid point]}]}
// "weight_slope" defaults to all zeros.
AdaptiveSystem tabular_system(const nlohmann::json& spec);

}  // namespace attrib
