#pragma once

#include <stdexcept>
#include <string>

namespace sibucket {

/// Base class for all library errors. `exit_code()` is the process exit code
/// the command-line tool reports for this category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid parameters or configuration (exit 2).
class ParameterError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Mismatched grids or dimensions between operands (exit 2).
class StructuralError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Linearly dependent pattern set or otherwise singular numerics (exit 3).
class SingularSetError : public Error {
 public:
  SingularSetError(const std::string& what, std::size_t deficient)
      : Error(what), deficient_(deficient) {}
  std::size_t deficient_count() const noexcept { return deficient_; }
  int exit_code() const noexcept override { return 3; }

 private:
  std::size_t deficient_;
};

/// A metric was requested whose preconditions (Condition 1 or 2) fail (exit 3).
class ConditionError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// File system or format problems (exit 4).
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace sibucket
