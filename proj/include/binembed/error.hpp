#pragma once

#include <stdexcept>
#include <string>

namespace binembed {

// Base type for all library errors.
class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch between two operands (vector lengths, code widths, ...).
class DimensionError : public Error {
  using Error::Error;
};

// Input is valid by shape but mathematically unusable (zero-norm vector,
// zero-variance data set).
class DegenerateInputError : public Error {
  using Error::Error;
};

// Requested decomposition rank exceeds what the data supports.
class RankError : public Error {
  using Error::Error;
};

// Bad argument value (non-positive count, k larger than the database, ...).
class ArgumentError : public Error {
  using Error::Error;
};

// Filesystem-level failure: open, read, or write.
class IoError : public Error {
  using Error::Error;
};

// Base for violations of the on-disk formats.
class FormatError : public IoError {
  using IoError::IoError;
};

// The 4-byte magic does not match the expected payload kind.
class MagicError : public FormatError {
  using FormatError::FormatError;
};

// Format version not understood by this build.
class VersionError : public FormatError {
  using FormatError::FormatError;
};

// Payload shorter (or longer) than the header declares.
class TruncationError : public FormatError {
  using FormatError::FormatError;
};

// Payload is structurally invalid: nonzero pad bits, unknown model tag.
class CorruptionError : public FormatError {
  using FormatError::FormatError;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
  using Error::Error;
};

}  // namespace binembed
