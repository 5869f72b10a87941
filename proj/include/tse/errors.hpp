#pragma once

#include <stdexcept>
#include <string>

namespace tse {

// Bad input data, bad schema, violated precondition. CLI exit code 3.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (divergence, non-finite results). CLI exit code 4.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tse
