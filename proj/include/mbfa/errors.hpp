#pragma once

#include <stdexcept>
#include <string>

namespace mbfa {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double off_norm)
      : Error(what), off_norm_(off_norm) {}
  // Off-diagonal Frobenius norm when the sweep budget ran out.
  double off_norm() const noexcept { return off_norm_; }

 private:
  double off_norm_;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input: ragged CSV rows, unparsable numbers, bad JSON.
class ParseError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class UnknownClassError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

class SplitOverlapError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

}  // namespace mbfa
