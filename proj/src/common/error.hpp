#pragma once

#include <stdexcept>
#include <string>

namespace focusfuse {

// Base of every exception the core throws. The C API maps each subclass to a
// distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or image dimensions do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// API misuse: wrong call order, bad argument values, missing gradients.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable files, bad dataset layout.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated checkpoint / image file, fingerprint mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf loss, failed gradient check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace focusfuse
