#pragma once

#include <stdexcept>
#include <string>

namespace cvq {

// Base class for every error thrown by the library. The CLI maps
// ConfigError/ShapeError/DomainError to exit code 1 and the rest to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Vector/frame lengths that do not fit the operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Inputs that make a computation undefined (all-zero stream, zero counts).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Out-of-range arguments to pure math helpers (gain, ratios).
class DomainError : public Error {
public:
    using Error::Error;
};

// Codebook index out of bounds.
class LookupError : public Error {
public:
    using Error::Error;
};

// finalize() called on a tree without a complete root-to-leaf path.
class UndertrainedError : public Error {
public:
    using Error::Error;
};

// A requested K cannot be produced (e.g. Birch leaf entries < K).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cvq
