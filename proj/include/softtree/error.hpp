#pragma once

#include <stdexcept>
#include <string>

namespace softtree {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible array extents; the message names both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed input data (CSV cells, response domains).
struct DataError : Error {
  using Error::Error;
};

// Numeric failure: overflow guards, non-finite gradients, divergence.
struct NumericError : Error {
  using Error::Error;
};

// Unreadable or inconsistent model files.
struct ModelFormatError : Error {
  using Error::Error;
};

}  // namespace softtree
