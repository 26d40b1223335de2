#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad dimensions, non-positive extents, out-of-range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A ball (or rescaled window) does not fit inside the grid it is evaluated on.
class ContainmentError : public Error {
public:
    using Error::Error;
};

/// Non-finite values produced by a user-supplied function or an iteration.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Smoothed energy increased across a continuation stage.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Binary/JSON reader found something it does not understand.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace fblab
