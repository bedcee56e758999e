// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adasgd {

/// Caller broke an operation precondition (dimension mismatch, bad index,
/// empty batch, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value violates a module constraint. `field()` names the
/// offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Argument outside the domain of a closed-form expression (pole of T(b),
/// learning rate at or above 2/L).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// No batch size in a sweep reached the requested precision.
class PrecisionUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adasgd
