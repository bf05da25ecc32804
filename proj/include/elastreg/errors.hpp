#pragma once

#include <stdexcept>
#include <string>

namespace elastreg {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad files, bad arguments, bad topology in the inputs. CLI exit code 2.
struct InputError : Error {
    using Error::Error;
};

// Failures of the numerics themselves. CLI exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

struct ParseError : InputError {
    using InputError::InputError;
};
struct UnsupportedCellType : InputError {
    using InputError::InputError;
};
struct TopologyError : InputError {
    using InputError::InputError;
};
struct EmptyCloud : InputError {
    using InputError::InputError;
};
struct EmptySelection : InputError {
    using InputError::InputError;
};
struct EmptySurface : InputError {
    using InputError::InputError;
};
struct EmptyTargets : InputError {
    using InputError::InputError;
};

struct DegenerateElement : NumericalError {
    using NumericalError::NumericalError;
};
struct DegenerateTriangle : NumericalError {
    using NumericalError::NumericalError;
};
struct DegenerateConfiguration : NumericalError {
    using NumericalError::NumericalError;
};
struct FactorizationError : NumericalError {
    using NumericalError::NumericalError;
};
struct DimensionMismatch : NumericalError {
    using NumericalError::NumericalError;
};
struct ZeroCurvature : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace elastreg
