#pragma once

#include <stdexcept>
#include <string>

namespace rail {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value; field() names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Argument outside the domain of an operation (bad action id, shape mismatch).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in a state that does not admit it (stepping a finished episode).
class StateError : public Error {
 public:
  using Error::Error;
};

// File contents failed validation (bad magic, truncated blob, inconsistent header).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A rollout task failed inside the worker pool.
class EngineError : public Error {
 public:
  EngineError(int direction, int sign, const std::string& what)
      : Error("rollout task (k=" + std::to_string(direction) + ", sign=" +
              (sign > 0 ? std::string("+") : std::string("-")) + ") failed: " + what),
        direction_(direction),
        sign_(sign) {}
  int direction() const noexcept { return direction_; }
  int sign() const noexcept { return sign_; }

 private:
  int direction_;
  int sign_;
};

// Non-finite value produced during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rail
