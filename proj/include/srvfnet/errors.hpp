#pragma once

#include <stdexcept>
#include <string>

namespace srvfnet {

/// Mismatched vector/grid sizes.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input is valid in shape but degenerate in value (all-zero derivative,
/// vanishing norm, antipodal cancellation, ...).
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition was violated by the caller.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values appeared during computation. The message names the
/// layer or graph node where they were first seen.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed external input (CSV, config, checkpoint). The message carries
/// the row/key that failed.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace srvfnet
