#pragma once

#include <stdexcept>
#include <string>

namespace zeroflow {

/// Violated precondition on an operation's inputs (bad grid, mismatched
/// fields, wrong nonlinearity kind, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The numerical method failed: blow-up, exhausted step rejection, loss of
/// positivity, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nodal curves could not be matched between snapshots; the caller has to
/// refine the snapshot stride.
class UnresolvedMatchingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or expression.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zeroflow
