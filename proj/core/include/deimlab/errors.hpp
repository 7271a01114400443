#pragma once

#include <stdexcept>
#include <string>

namespace deimlab {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand shapes are incompatible. Message names both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar parameter is outside its admissible range (e.g. tau <= 0).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input data violates a precondition (non-finite entries, nonzero mean, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// LU elimination hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, int pivot_index)
        : Error(what), pivot_index(pivot_index) {}
    int pivot_index;
};

/// A time integration produced a non-finite state.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, long step)
        : Error(what), step(step) {}
    long step;
};

/// Malformed or unknown configuration content.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File-level failure: missing input, bad magic, hash mismatch.
class IoError : public Error {
public:
    using Error::Error;
};

/// API misuse (e.g. backward from a non-scalar root).
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace deimlab
