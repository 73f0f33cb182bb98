#pragma once

#include <stdexcept>
#include <string>

namespace cpbid {

// Error categories surfaced by the library. The CLI maps each to a prefix in
// its diagnostics; all of them exit with status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

// Input outside its documented domain (corrupt data, bad arguments).
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "validation"; }
};

// Malformed file contents. Message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "parse"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

// A quantity that is mathematically undefined for the given input, e.g. a
// return-on-spend with zero spend.
class UndefinedError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "undefined"; }
};

class MissingCalibrationError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "missing-calibration"; }
};

// A contract breach between components; never expected in a correct run.
class InvariantError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "invariant"; }
};

}  // namespace cpbid
