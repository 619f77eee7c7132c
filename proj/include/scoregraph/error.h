/**
 * @file error.h
 * @brief Exception types raised by the scoregraph library.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scoregraph {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input bytes (note-list JSON, MIDI).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates Note/Score invariants.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::int64_t> note_ids)
      : Error(what), note_ids_(std::move(note_ids)) {}

  const std::vector<std::int64_t>& note_ids() const noexcept { return note_ids_; }

 private:
  std::vector<std::int64_t> note_ids_;
};

/// Time signature that cannot be laid out on the integer division grid.
class UnsupportedMeterError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or an operation called on an incompatible graph.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Batch assembly precondition failure (e.g. duplicate score index).
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Serialized container is malformed, truncated, or of the wrong version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Section payload does not match its recorded CRC32.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Matrix or array dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace scoregraph
