#pragma once

#include <stdexcept>
#include <string>

namespace flowinfer {

// Shape-incompatible operands.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg)
      : std::runtime_error("dimension: " + msg) {}
};

// An operation produced NaN/Inf; the message names the offending op.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg)
      : std::runtime_error("numeric: " + msg) {}
};

// Invalid distribution or model parameter.
class ParameterError : public std::runtime_error {
 public:
  explicit ParameterError(const std::string& msg)
      : std::runtime_error("parameter: " + msg) {}
};

// A module precondition was violated (wrong dataset size, empty set, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg)
      : std::runtime_error("contract: " + msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg)
      : std::runtime_error("config: " + msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg)
      : std::runtime_error("io: " + msg) {}
};

// Signal, not an error: the simulator produced a divergent trajectory and the
// (theta, x) pair must be discarded and redrawn.
struct SimulationRejected {};

}  // namespace flowinfer
