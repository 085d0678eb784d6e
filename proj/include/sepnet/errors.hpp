#pragma once

#include <stdexcept>
#include <string>

namespace sepnet {

// Error taxonomy. Everything derives from std::runtime_error so callers can
// catch broadly; the distinct types exist so tests can pin down which
// contract was violated.

// Shape or rank disagreement between tensors.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller passed a value outside an operation's domain (empty list,
// negative count, unknown name).
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal precondition between modules was broken (missing derivative
// field, tape mismatch).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or unsatisfiable run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested feature outside the supported envelope (activation kind,
// derivative order).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sepnet
