#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace attrib {

// One verified invariant: the worst residual observed over the suite's
// built-in seeded systems against its pinned tolerance.
struct InvariantResult {
    std::string suite;
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Suite names: core, dp, action-only, bandit, gallery, all.
std::vector<std::string> verify_suite_names();

// Runs a named invariant suite over seeded randomized systems. tolerance_scale
// multiplies every tolerance. When log is nonnull, side artifacts (the gallery
// certificate) are streamed to it. Throws DomainError for unknown suites.
std::vector<InvariantResult> run_verify_suite(const std::string& suite, std::uint64_t seed,
                                              double tolerance_scale, std::ostream* log);

}  // namespace attrib
