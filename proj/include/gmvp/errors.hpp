#pragma once

#include <stdexcept>
#include <string>

namespace gmvp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's mathematical domain (e.g. log of a non-positive value).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared in a forward value or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file problems: bad magic, version mismatch, truncation, checksum.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmvp
