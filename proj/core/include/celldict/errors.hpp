#pragma once

#include <stdexcept>
#include <string>

namespace celldict {

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, malformed or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values inside an iterative solver (CLI exit code 4).
class NumericalDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace celldict
