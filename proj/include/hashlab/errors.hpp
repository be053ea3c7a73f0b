#pragma once

#include <stdexcept>
#include <string>

namespace hashlab {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad length, out-of-range parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed BHDS / BHMO / CSV content.
class FormatError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, Inconsistent, Malformed };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Trainer could not produce a model (degenerate data, singular kernel, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace hashlab
