#pragma once

#include <stdexcept>
#include <string>

namespace driftkit {

// Malformed input data: bad rows, violated record invariants, bad traces.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A state-machine contract was violated at runtime (unknown label id,
// duplicate delivery, retrain with no data, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace driftkit
