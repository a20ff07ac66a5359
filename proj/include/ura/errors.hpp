#pragma once

#include <stdexcept>
#include <string>

namespace ura {

// Raised when linear-algebra state goes bad (indefinite covariance,
// vanishing rank-1 denominator, non-finite objective).
class NumericalFailure : public std::runtime_error {
  public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed experiment configuration (unknown keys, broken
// parity profile, bad field values). Maps to exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ura
