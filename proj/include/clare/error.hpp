#pragma once

#include <stdexcept>
#include <string>

namespace clare {

/// Base class for every failure raised by the engine. The CLI maps these to
/// exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed something that violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (open, short write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Rank correlation requested on a constant series. Never reported as 0.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

}  // namespace clare
