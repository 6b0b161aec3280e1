#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace attrib {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or violated operation precondition.
class DomainError : public Error {
public:
    using Error::Error;
};

// Conditioning on a prefix with zero baseline probability.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// Non-finite state, degenerate probability, or similar runtime failure.
// Carries the 1-based round at which the failure occurred (0 if unknown).
class NumericError : public Error {
public:
    NumericError(const std::string& msg, int round = 0)
        : Error(msg), round_(round) {}
    int round() const { return round_; }

private:
    int round_;
};

// Importance-sampling support violation: a continuation is reachable under
// the perturbation but has zero baseline probability.
class OverlapError : public Error {
public:
    OverlapError(const std::string& msg, std::vector<int> witness, int round = 0)
        : Error(msg), witness_(std::move(witness)), round_(round) {}
    const std::vector<int>& witness() const { return witness_; }
    int round() const { return round_; }

private:
    std::vector<int> witness_;
    int round_;
};

// Analytic score form requested on an eps-unstable support.
class SupportInstabilityError : public Error {
public:
    SupportInstabilityError(const std::string& msg, std::vector<int> continuation)
        : Error(msg), continuation_(std::move(continuation)) {}
    const std::vector<int>& continuation() const { return continuation_; }

private:
    std::vector<int> continuation_;
};

// Malformed configuration file or experiment description.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace attrib
