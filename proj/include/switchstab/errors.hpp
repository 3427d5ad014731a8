#pragma once

#include <stdexcept>
#include <string>

namespace switchstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input (bad dimensions, non-finite entries,
/// nonpositive rates, invalid probability vectors).
class InputError : public Error {
public:
    using Error::Error;
};

/// An iterative method (eigensolver, adaptive quadrature, search) did not
/// reach its target within the allotted budget.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double achieved = 0.0)
        : Error(what), achieved_(achieved) {}

    /// Best estimate available when the method gave up.
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Dense propagation would overflow; use polar (log-norm) propagation.
class OverflowRisk : public Error {
public:
    using Error::Error;
};

/// A structural hypothesis required by a check (normality, Hurwitz) does not hold.
class HypothesisViolated : public Error {
public:
    using Error::Error;
};

/// A numerical search hit the boundary of its range.
class SearchBoundaryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A requested construction cannot be realized.
class ConstructionError : public Error {
public:
    enum class Kind { NoWindow, ScaleTooSmall, ScaleUnderflow };

    ConstructionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace switchstab
