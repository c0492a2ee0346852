#pragma once

#include <stdexcept>
#include <string>

namespace oihrl {

/// Input violates an operation's preconditions (shape mismatch, unknown id, empty vector).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The task graph is malformed (cycle, dangling reference).
class StructuralError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A configuration file or parameter set is unusable.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint or results file could not be read back.
class LoadError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}    // namespace oihrl
