#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace attrib {

// Deterministic pairwise tree reduction. The result depends only on the index
// range, never on how callers partition the work.
double pairwise_sum(std::span<const double> values);

// Options for finite differencing in the perturbation parameter.
struct FdOptions {
    double step = 1e-4;
    bool richardson = false;  // combine steps h and h/2
};

// Derivative of f at 0 where the argument must stay inside [lo, hi].
// Uses a central difference when both sides fit, otherwise a one-sided
// second-order stencil toward the interior.
double eps_derivative(const std::function<double(double)>& f,
                      double lo, double hi, const FdOptions& opts = {});

// Mixed-radix index space for continuation tuples z_{t+1:T}. An empty radix
// list denotes the single empty continuation.
class ContinuationSpace {
public:
    ContinuationSpace() = default;
    explicit ContinuationSpace(std::vector<int> radices);

    std::size_t size() const { return size_; }
    int rounds() const { return static_cast<int>(radices_.size()); }
    const std::vector<int>& radices() const { return radices_; }

    // Lexicographic: the earliest round is the most significant digit.
    std::vector<int> decode(std::size_t index) const;
    std::size_t encode(std::span<const int> digits) const;

    bool operator==(const ContinuationSpace& other) const { return radices_ == other.radices_; }

private:
    std::vector<int> radices_;
    std::size_t size_ = 1;
};

// SplitMix64 step; the standard stateless generator used to derive per-index
// substreams so that sample i depends only on (seed, i).
std::uint64_t splitmix64(std::uint64_t x);

// Uniform double in [0, 1) from a 64-bit word.
double uniform_from_bits(std::uint64_t bits);

// Golden-section refinement of a maximizer of f on [a, b].
double golden_section_max(const std::function<double(double)>& f,
                          double a, double b, int iters = 80);

}  // namespace attrib
