#pragma once

#include <stdexcept>
#include <string>

namespace dualsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or configuration value was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear-algebra problem is rank deficient (e.g. two spikes too close).
class IllPosed : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of budget.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// A proven bound or invariant was found violated numerically.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

/// Maximizer tracking left the basin of the reference maximizer.
class BasinEscape : public Error {
 public:
  using Error::Error;
};

}  // namespace dualsr
