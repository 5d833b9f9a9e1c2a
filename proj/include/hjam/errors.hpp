#pragma once

#include <stdexcept>
#include <string>

namespace hjam {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range model or config input.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Config file problems; `key` names the offending entry when known.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : ValidationError(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Learner produced a non-finite Q or multiplier.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hjam
