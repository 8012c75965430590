#pragma once

#include <stdexcept>
#include <string>

namespace quadmap {

/// Base class for all quadmap errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (quad names, quarter tokens, manifests).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Numeric input outside the function's mathematical domain.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Structurally invalid arguments (shape mismatch, empty input, bad fractions).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Unreadable or corrupt file content.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Filesystem-level failure (missing file, failed write).
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace quadmap
