#pragma once

#include <stdexcept>
#include <string>

namespace seis {

// Error categories map one-to-one onto CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema violation, dangling reference, or bad topology in an input document.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Instance exceeds solver limits, or a model is infeasible.
class LimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A library invariant was violated; indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A dispatch plan violates routing semantics (partition, clustering, subtours).
class FeasibilityError : public LimitError {
 public:
  using LimitError::LimitError;
};

}  // namespace seis
