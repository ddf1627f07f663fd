#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsdecay {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters: bad grid, malformed scenario, out-of-range option.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Potential evaluates to a non-finite value or violates its lower bound.
class InvalidPotentialError : public Error {
public:
    using Error::Error;
};

/// Operation requested on a potential of the wrong spectral class.
class ClassificationError : public Error {
public:
    using Error::Error;
};

/// An iterative numerical kernel failed to reach its target accuracy.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Verdict branch inconsistent with the spectral data or potential family.
class MisconfigurationError : public Error {
public:
    using Error::Error;
};

/// Not enough samples above the amplitude floor to fit a decay law.
class TooFewSamplesError : public Error {
public:
    using Error::Error;
};

/// p at or above the critical Sobolev exponent.
class SupercriticalError : public Error {
public:
    using Error::Error;
};

/// Bootstrap slack outside its admissible interval.
class SlackError : public Error {
public:
    using Error::Error;
};

/// A guard that can only trip when a proven invariant is broken.
class InternalInvariantError : public Error {
public:
    using Error::Error;
};

struct NewtonTrace {
    std::size_t iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> damping;
    bool converged = false;
};

/// Base for solver failures; carries the Newton trace and, for continuation
/// runs, the ladder rung at which the failure happened.
class SolveError : public Error {
public:
    SolveError(const std::string& what, NewtonTrace trace, long rung = -1)
        : Error(what), trace_(std::move(trace)), rung_(rung) {}

    const NewtonTrace& trace() const noexcept { return trace_; }
    long rung() const noexcept { return rung_; }

private:
    NewtonTrace trace_;
    long rung_;
};

class NonConvergenceError : public SolveError {
public:
    using SolveError::SolveError;
};

/// Newton converged to (or started at) u = 0.
class TrivialSolutionError : public SolveError {
public:
    using SolveError::SolveError;
};

/// Jacobian pivot collapsed; a continuation ladder or a different seed is needed.
class SingularJacobianError : public SolveError {
public:
    using SolveError::SolveError;
};

}  // namespace nlsdecay
