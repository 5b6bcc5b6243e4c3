#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdestab {

// Bad arguments to library operations (empty grids, out-of-range exponents, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Adaptive quadrature or table construction could not reach its tolerance.
class QuadratureFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A transform or solver cannot be built from the given coefficients
// (e.g. unbounded drift for the scale transform).
class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query outside the domain of an invertible map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A scheme produced a non-finite state; carries the offending step.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_index(step) {}
  std::size_t step_index;
};

// Malformed or incomplete run configuration; carries the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string field_name)
      : std::runtime_error(what), field(std::move(field_name)) {}
  std::string field;
};

// A coefficient failed its declared pointwise condition check.
class ConditionCheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdestab
