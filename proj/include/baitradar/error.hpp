#pragma once

#include <stdexcept>
#include <string>

namespace baitradar {

/// Base class for failures caused by input data (files, records, checkpoints)
/// rather than by programming errors. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated shape or configuration contract inside the numeric code.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace baitradar
