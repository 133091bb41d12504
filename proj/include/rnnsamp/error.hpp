#pragma once

#include <stdexcept>
#include <string>

namespace rnnsamp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates its documented domain (bad fraction, non-positive rate, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A size requirement is not met (look-back too long, empty partition, ...).
class SizeError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree with the architecture or with each other.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input text could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// I/O failure (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Linear system is rank deficient.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

} // namespace rnnsamp
