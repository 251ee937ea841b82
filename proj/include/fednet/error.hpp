#pragma once

#include <stdexcept>
#include <string>

namespace fednet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data: unreadable files, malformed records,
/// series too short for the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fednet
