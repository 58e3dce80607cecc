#pragma once

#include <stdexcept>
#include <string>

namespace bzo {

/// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical guard tripped at run time. The CLI maps this to exit code 3.
class NumericalGuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wavefront weight reached the edge of the truncated lattice.
class BoundaryContamination : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

/// Grid refinement did not settle within its budget.
class ConvergenceFailure : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

/// A series is too short (or badly sampled) for the requested analysis.
class InsufficientData : public NumericalGuardError {
public:
    using NumericalGuardError::NumericalGuardError;
};

/// sin(beta1) sin(beta2) = 0: the coin does not mix, no threshold exists.
class DegenerateCoin : public ConfigError {
public:
    using ConfigError::ConfigError;
};

}  // namespace bzo
