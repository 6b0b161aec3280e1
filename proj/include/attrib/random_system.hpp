#pragma once

#include <cstdint>

#include "attrib/action_only.hpp"
#include "attrib/system.hpp"

namespace attrib {

// Seeded generator of smooth test systems: softmax kernels with affine
// state-dependent logits, tanh-perturbed affine updates, and a quadratic
// evaluation, all with exact analytic derivatives.
struct RandomSystemOptions {
    int horizon = 3;
    int dim = 2;
    int max_cardinality = 3;
    bool exogenous = false;  // zero out the kernels' state dependence
};

AdaptiveSystem random_smooth_system(std::uint64_t seed, const RandomSystemOptions& opt = {});

// Seeded factorized system with softmax contexts, a linear-feature softmax
// policy over two actions, and Bernoulli rewards; strictly interior
// everywhere so the change of measure is defined at every perturbation level.
struct RandomActionOnlyOptions {
    int horizon = 3;
    int dim = 2;
};

ActionOnlySystem random_action_only_system(std::uint64_t seed,
                                           const RandomActionOnlyOptions& opt = {});

}  // namespace attrib
