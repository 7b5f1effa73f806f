#pragma once

#include <stdexcept>
#include <string>

namespace airvc {

/// Base class for every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, invalid specs, geometry mismatches.
/// The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Raised by any estimation step; `stage()` names the step that failed.
class EstimationError : public Error {
 public:
  EstimationError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace airvc
