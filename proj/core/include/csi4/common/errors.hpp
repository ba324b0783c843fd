#pragma once

#include <stdexcept>
#include <string>

namespace csi4 {

// Root of the project's exception hierarchy. The CLI maps subclasses onto
// process exit codes, so each failure category gets its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or batch shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// The requested operation needs a graph capability that is not enabled.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Values that are structurally valid but semantically wrong (labels out of
// range, too few samples per class, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace csi4
