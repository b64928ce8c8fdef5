#pragma once

#include <stdexcept>
#include <string>

namespace motorprim {

/// Malformed or inconsistent configuration, model or demonstration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Simulation produced a non-finite state.
class NumericalAbort : public std::runtime_error {
 public:
  explicit NumericalAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace motorprim
