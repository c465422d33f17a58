#pragma once

#include <stdexcept>
#include <string>

namespace texgram {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing or mismatched input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed convergence (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace texgram
