#pragma once

#include <stdexcept>
#include <string>

namespace cae {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated input data (EMB1/LBL1 files, CSV, label vectors).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Operands whose shapes do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or an inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Degenerate numerics: zero vectors, overflow, non-finite intermediates.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace cae
