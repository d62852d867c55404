#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace vqlab {

// Bad arguments: dimension mismatch, empty sample, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Enumeration or experiment size beyond the supported guard.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Codebook with coincident points or vanishing cells where a positive
// B / p_min is required.
class DegenerateCodebookError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature that failed to reach its tolerance, or any other numeric
// breakdown. Carries key/value diagnostics for machine-readable reporting.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::map<std::string, double> diagnostics = {})
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

  const std::map<std::string, double>& diagnostics() const { return diagnostics_; }

 private:
  std::map<std::string, double> diagnostics_;
};

}  // namespace vqlab
