/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_ERROR_HPP
#define KGP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace kgp {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int { usage = 1, validation = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Shape or conformability mismatch.
class DimensionError : public ValidationError {
 public:
  explicit DimensionError(const std::string& what) : ValidationError(what) {}
};

/// File system and format problems. Reported like validation failures.
class IoError : public ValidationError {
 public:
  explicit IoError(const std::string& what) : ValidationError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

[[noreturn]] void throw_dimension(const std::string& what);
[[noreturn]] void throw_validation(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace kgp

#endif  // KGP_ERROR_HPP
