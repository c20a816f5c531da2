#pragma once

#include <stdexcept>
#include <string>

namespace attnlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad sigma, mismatched dims...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// Raised when a normalization or correlation needs variance and the input is constant.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ReferentialIntegrity : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Payload does not match its schema. Maps to HTTP 422.
class SchemaError : public Error {
 public:
  SchemaError(std::string field_path, const std::string& what)
      : Error(field_path + ": " + what), field_path_(std::move(field_path)) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

/// Unknown assignment, stimulus or chart. Maps to HTTP 404.
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace attnlab
