#pragma once

#include <stdexcept>
#include <string>

namespace rpf {

// Root of every library error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// An operation was asked to run outside its precondition, e.g. an empirical
// CLT with zero limiting variance.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Numerical failure (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
    virtual const char* kind() const noexcept { return "NumericalError"; }
};

#define RPF_NUMERICAL_ERROR(Name)                                          \
    class Name : public NumericalError {                                   \
    public:                                                                \
        using NumericalError::NumericalError;                              \
        const char* kind() const noexcept override { return #Name; }       \
    };

RPF_NUMERICAL_ERROR(SolverDivergence)
RPF_NUMERICAL_ERROR(NotMixingWithinCap)
RPF_NUMERICAL_ERROR(NoHyperbolicTime)
RPF_NUMERICAL_ERROR(StarViolation)
RPF_NUMERICAL_ERROR(BranchExplosion)
RPF_NUMERICAL_ERROR(NoConvergence)
RPF_NUMERICAL_ERROR(BoundaryOfCone)
RPF_NUMERICAL_ERROR(ResolventSingular)
RPF_NUMERICAL_ERROR(DivergentSeries)
RPF_NUMERICAL_ERROR(SeriesPreconditionViolated)

#undef RPF_NUMERICAL_ERROR

}  // namespace rpf
