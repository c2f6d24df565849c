#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace photonas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on argument values was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data (images, lists, config) is unusable.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at index " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Malformed binary file; offset is the byte where reading failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergedError : public Error {
 public:
  explicit DivergedError(int step)
      : Error("training diverged: non-finite loss at step " + std::to_string(step)), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace photonas
