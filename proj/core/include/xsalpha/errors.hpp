#pragma once

#include <stdexcept>
#include <string>

namespace xsa {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or schema-violating input data (CLI exit code 3).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A statistic or solver could not produce a finite answer (CLI exit code 4).
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace xsa
