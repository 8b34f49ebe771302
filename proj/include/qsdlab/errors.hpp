#pragma once

#include <stdexcept>
#include <string>

namespace qsdlab {

/// Caller passed an argument that violates a precondition.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A run was configured with values no module accepts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation failed to converge or produced an impossible value.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Every particle of a Fleming-Viot ensemble left the domain in one sweep.
class DegenerateEnsembleError : public NumericalError {
 public:
  explicit DegenerateEnsembleError(const std::string& what) : NumericalError(what) {}
};

[[noreturn]] void throw_input(const std::string& what);
[[noreturn]] void throw_config(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace qsdlab
