#pragma once

#include <stdexcept>
#include <string>

namespace ncoadj {

// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed data, impossible configuration, violated
// preconditions that a caller could have checked. CLI exit code 2.
struct validation_error : error {
  using error::error;
};

// Numerical failure inside an otherwise valid computation (rank-deficient
// design, unit leverage, non-finite intermediate). CLI exit code 3.
struct numeric_error : error {
  using error::error;
};

}  // namespace ncoadj
