#pragma once

#include <stdexcept>
#include <string>

namespace insider {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument ranges: bad intervals, c1 >= c2, out-of-range parameters.
struct DomainError : Error {
  using Error::Error;
};

// Operation evaluated at or beyond the information horizon T.
struct SingularTime : Error {
  using Error::Error;
};

// Adaptive quadrature exhausted its budget before reaching tolerance.
struct NonConvergence : Error {
  using Error::Error;
};

// A simulated path produced a non-finite value (step size too coarse).
struct NonFinite : Error {
  using Error::Error;
};

// A certified upper bound was violated beyond tolerance.
struct BoundViolation : Error {
  using Error::Error;
};

}  // namespace insider
