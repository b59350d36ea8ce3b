// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dancecls {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text or binary record. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid input with the wrong shape (joint count, ragged rows).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain value: non-finite coordinate, empty sequence, bad fraction.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// All joints of a frame collapse onto one point; no scale can be derived.
class DegeneratePoseError : public ValueError {
 public:
  using ValueError::ValueError;
};

/// Caller violated a precondition (shape mismatch, label out of range).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or feature container could not be read back.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Data does not match what a trained model expects (feature layout, streams).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace dancecls
