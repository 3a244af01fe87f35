#ifndef XDNN_ERRORS_HPP
#define XDNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xdnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or insufficient dimensions (row lengths, vector sizes, row counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input for which an operation is mathematically undefined, e.g. a zero vector.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object in the wrong state (empty model, bad index, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input carrying unusable values (NaN, too few samples per class).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace xdnn

#endif  // XDNN_ERRORS_HPP
