#pragma once

#include <stdexcept>
#include <string>

namespace drsurv {

/// CSV header does not match the requested schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed cell content; message carries the 1-based row index.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structurally valid input with out-of-domain values.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Estimation failed numerically (divergence, degenerate sample, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace drsurv
