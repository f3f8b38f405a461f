#pragma once

#include <stdexcept>
#include <string>

namespace dropsurv {

/// Broad failure class; the CLI maps each to an exit code.
enum class ErrorCategory {
  usage,      // bad arguments or options
  data,       // schema, parse, validation, encoding, configuration
  numerical,  // likelihood, convergence, rank deficiency
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message) : Error(ErrorCategory::usage, message) {}
};

/// Missing or malformed CSV header.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

/// A data row that cannot be parsed or violates a record invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

class EncodingError : public Error {
 public:
  explicit EncodingError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

/// Partial likelihood undefined (no observed events).
class LikelihoodError : public Error {
 public:
  explicit LikelihoodError(const std::string& message) : Error(ErrorCategory::numerical, message) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& message) : Error(ErrorCategory::numerical, message) {}
};

class RankDeficiencyError : public Error {
 public:
  explicit RankDeficiencyError(const std::string& message) : Error(ErrorCategory::numerical, message) {}
};

class UnderdeterminedError : public Error {
 public:
  explicit UnderdeterminedError(const std::string& message) : Error(ErrorCategory::numerical, message) {}
};

}  // namespace dropsurv
