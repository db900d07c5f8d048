#pragma once

#include <stdexcept>
#include <string>

namespace mather {

/// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed parameters: bad exponents, unknown presets, empty grids.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical precondition failed (smallness, support, ball membership).
/// The computation refuses instead of returning an answer it cannot stand behind.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A construction could not be completed (no concavity threshold, blend
/// without a valid constant, iteration budget exhausted).
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// A structural invariant of a representation does not hold.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace mather
