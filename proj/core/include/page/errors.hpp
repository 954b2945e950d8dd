#pragma once

#include <stdexcept>
#include <string>

namespace page {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or out-of-domain input data (datasets, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

// API misuse: empty inputs, preconditions the caller controls.
class UsageError : public Error {
 public:
  using Error::Error;
};

// The problem does not expose what an operation needs (f*, L, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A sampling-based constant estimator produced no admissible sample.
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace page
