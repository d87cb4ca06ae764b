#pragma once

#include <stdexcept>
#include <string>

namespace dircalc {

/// Input that violates a documented precondition. The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (non-finite values, eigensolver residuals). CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dircalc
