#pragma once

#include <stdexcept>
#include <string>

namespace combu {

// Base for every error raised by the library. The CLI maps these onto exit
// codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid hyperparameter, distribution parameter or argument value.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Dimension mismatch between matrices, vectors or layers.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A value falls outside the domain an operation is defined on (e.g. log of a
// non-positive interval).
class DomainError : public Error {
public:
    using Error::Error;
};

// Interval analysis produced a non-finite bound.
class BoundError : public Error {
public:
    using Error::Error;
};

// A construction would overflow or lose all precision in 64-bit floats.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// Malformed input text (s-expressions, CSV, JSON payloads).
class ParseError : public Error {
public:
    using Error::Error;
};

// Data does not match the declared schema (missing columns, missing values).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Broken bookkeeping inside the library; reaching one is a bug.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace combu
