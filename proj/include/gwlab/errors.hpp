#pragma once

#include <stdexcept>
#include <string>

namespace gwlab {

/// Malformed model or configuration (missing law, parameter out of range,
/// unknown key). Distinct from a failed criticality check, which is only
/// reported, never thrown.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Conditioning event whose probability is below the configured floor.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested Monte Carlo experiment cannot produce enough samples.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Asymptotic constants requested for moments that do not define them.
class ConstantsUndefinedError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive integrator could not reach the end point.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gwlab
