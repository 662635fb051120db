#pragma once

#include <stdexcept>
#include <string>

namespace petc {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The requested sampling period is not below the maximum admissible period.
class InfeasiblePeriodError : public Error {
public:
    using Error::Error;
};

/// A timing constraint such as (1+s)λ² < 1 is violated.
class ConstraintViolationError : public Error {
public:
    using Error::Error;
};

/// No parameter tuple satisfies all timing constraints for the chosen period.
class SelectionError : public Error {
public:
    using Error::Error;
};

/// Block sizes disagree with a block layout.
class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Model dimensions or configuration are inconsistent.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// The simulated state became non-finite.
class SimulationDivergedError : public Error {
public:
    using Error::Error;
};

/// An LMI stage of a design pipeline found no feasible point within budget.
class InfeasibleDesignError : public Error {
public:
    using Error::Error;
};

} // namespace petc
