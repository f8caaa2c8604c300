#pragma once

#include <stdexcept>
#include <string>

namespace cmvn {

// Root of every error raised by the library. The CLI maps each family to an
// exit code, so new error types must derive from one of the families below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- numeric family (exit code 4) ----
class NumericError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateCluster : public NumericError {
 public:
  using NumericError::NumericError;
};

class AllStartsFailed : public NumericError {
 public:
  using NumericError::NumericError;
};

// ---- argument / shape family (exit code 2 at the CLI) ----
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DomainError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class LengthMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class KindMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// ---- I/O family (exit code 3) ----
class IoError : public Error {
 public:
  using Error::Error;
};

// ---- schema / content family (exit code 5) ----
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class ShapeError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class MissingLabels : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

}  // namespace cmvn
