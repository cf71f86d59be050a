#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace opeval {

// Base error carrying a short machine-readable kind ("support-violation",
// "dimension-mismatch", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed or inconsistent input (bad file, bad dimensions, bad scalar
// parameters). CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Estimator/analysis precondition failures on structurally valid input
// (missing support, zero divergence, ...). CLI maps these to exit code 3.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace opeval
