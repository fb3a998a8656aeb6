// SPDX-License-Identifier: Apache-2.0
//
// Exception types shared by every module.

#pragma once

#include <stdexcept>
#include <string>

namespace cvaegen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, embedding files, ARPA files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parses but violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A requested draw or selection is larger than the population.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Token id or class index out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnknownSlotError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss term.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvaegen
