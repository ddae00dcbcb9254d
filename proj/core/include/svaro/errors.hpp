#pragma once

#include <stdexcept>
#include <string>

namespace svaro {

/// Base class for all errors raised by the library. `kind()` is a short
/// machine-parsable tag used by the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid argument or precondition violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// Configuration or file content does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "schema"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// A factorization or draw failed numerically.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

}  // namespace svaro
