#pragma once

#include <stdexcept>
#include <string>

namespace gensyn {

/// Bad configuration or malformed input files.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Structurally valid input whose content violates a contract
/// (zero-total tables, missing conditionals, schema mismatches).
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Numerical failure (empty support after thresholding, factorization failure).
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace gensyn
