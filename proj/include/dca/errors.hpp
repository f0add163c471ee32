#pragma once

#include <stdexcept>
#include <string>

namespace dca {

// Error classes map onto CLI exit codes: everything except InvariantError is
// a user-facing failure (exit 1); InvariantError signals an internal bug (exit 2).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary file decoding failures, one subclass per corruption class.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace dca
