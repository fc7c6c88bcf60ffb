#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lastexit {

// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A covariance that fails the positive-semidefinite check.
class NotPositiveSemidefinite : public InvalidArgument {
 public:
  NotPositiveSemidefinite(const std::string& what, double eigenvalue)
      : InvalidArgument(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// Requested work or memory exceeds a documented budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external input (CSV rows and the like).
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite values or an empty risk set met during a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace lastexit
