#pragma once

#include <stdexcept>
#include <string>

namespace clutter {

// Base for every error the library raises. DataError covers bad inputs
// (files, labels, dimensions); anything else derived from Error is a
// runtime failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  DimensionError(std::size_t expected, std::size_t actual)
      : DataError("dimension error: expected " + std::to_string(expected) +
                  " values, got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class UnknownLabelError : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Row-level CSV failure; line numbers are 1-based and count the header.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateFeatureError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateTrainingError : public DataError {
 public:
  using DataError::DataError;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

class InvalidPoseError : public Error {
 public:
  using Error::Error;
};

class UndefinedCurveError : public Error {
 public:
  using Error::Error;
};

}  // namespace clutter
