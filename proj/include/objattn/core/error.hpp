#pragma once

#include <stdexcept>
#include <string>

namespace objattn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed artifact or config. The message names the offending field.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& problem);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// A domain-type invariant was violated (bad box, empty scene, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace objattn
