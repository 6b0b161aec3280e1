#include "attrib/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include "attrib/errors.hpp"

namespace attrib {

double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n == 1) return values[0];
    if (n == 2) return values[0] + values[1];
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

double central(const std::function<double(double)>& f, double h) {
    return (f(h) - f(-h)) / (2.0 * h);
}

// Second-order one-sided stencil from 0 into the direction of sign(h).
double one_sided(const std::function<double(double)>& f, double h) {
    return (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
}

}  // namespace

double eps_derivative(const std::function<double(double)>& f,
                      double lo, double hi, const FdOptions& opts) {
    if (!(lo < hi)) throw DomainError("eps_derivative: empty interval");
    if (!(lo <= 0.0 && 0.0 <= hi))
        throw DomainError("eps_derivative: 0 outside admissible interval");
    double h = opts.step;

    auto estimate = [&](double step) {
        if (-step >= lo && step <= hi) return central(f, step);
        if (2.0 * step <= hi) return one_sided(f, step);
        if (-2.0 * step >= lo) return one_sided(f, -step);
        throw DomainError("eps_derivative: interval too small for the requested step");
    };

    if (!opts.richardson) return estimate(h);
    const double coarse = estimate(h);
    const double fine = estimate(h / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

ContinuationSpace::ContinuationSpace(std::vector<int> radices)
    : radices_(std::move(radices)) {
    size_ = 1;
    for (int r : radices_) {
        if (r < 1) throw DomainError("ContinuationSpace: radix must be >= 1");
        size_ *= static_cast<std::size_t>(r);
    }
}

std::vector<int> ContinuationSpace::decode(std::size_t index) const {
    if (index >= size_) throw DomainError("ContinuationSpace::decode: index out of range");
    std::vector<int> digits(radices_.size());
    for (std::size_t i = radices_.size(); i-- > 0;) {
        const auto r = static_cast<std::size_t>(radices_[i]);
        digits[i] = static_cast<int>(index % r);
        index /= r;
    }
    return digits;
}

std::size_t ContinuationSpace::encode(std::span<const int> digits) const {
    if (digits.size() != radices_.size())
        throw DomainError("ContinuationSpace::encode: digit count mismatch");
    std::size_t index = 0;
    for (std::size_t i = 0; i < radices_.size(); ++i) {
        if (digits[i] < 0 || digits[i] >= radices_[i])
            throw DomainError("ContinuationSpace::encode: digit out of range");
        index = index * static_cast<std::size_t>(radices_[i]) + static_cast<std::size_t>(digits[i]);
    }
    return index;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double golden_section_max(const std::function<double(double)>& f,
                          double a, double b, int iters) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    const double mid = (a + b) / 2.0;
    return std::max(f(mid), std::max(fc, fd));
}

}  // namespace attrib
