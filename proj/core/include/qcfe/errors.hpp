// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <stdexcept>
#include <string>

namespace qcfe {

/// Malformed input: bad file contents, out-of-range indices, schema
/// violations. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (typically non-convergence). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Filesystem / stream failure. Maps to CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcfe
