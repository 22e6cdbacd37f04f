#pragma once

#include <stdexcept>
#include <string>

namespace milq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration supplied by the caller (CLI exit code 1).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used: unreadable files, empty masks, missing classes (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedHeader : public DataError {
 public:
  using DataError::DataError;
};

class PayloadSizeMismatch : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedType : public DataError {
 public:
  using DataError::DataError;
};

/// A numerical procedure failed to converge or produced unusable values (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace milq
