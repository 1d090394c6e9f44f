#pragma once

#include <stdexcept>
#include <string>

namespace igpr {

/// Base class for all igpr errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or dimension mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a manifold invariant (non-unit sphere vector, non-PD matrix, ...).
class InvalidPointError : public Error {
 public:
  using Error::Error;
};

/// Log/transport undefined at the given arguments (antipodal sphere points).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failed due to ill conditioning; carries the smallest eigenvalue seen.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& msg, double min_eigenvalue)
      : Error(msg + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Malformed input data (CSV parse failures and the like).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace igpr
