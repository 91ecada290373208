// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace peprank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, peptides, tables).
class DataError : public Error {
 public:
  using Error::Error;
};

class UnknownTokenError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// Tensor shape or mask disagreement.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to a numeric routine (out-of-range mass, bad charge, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace peprank
