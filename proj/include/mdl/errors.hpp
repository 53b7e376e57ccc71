#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mdl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested precision exceeds the configured cap, or a decision could not
/// be certified before reaching it.
struct CapExceeded : Error {
  using Error::Error;
};

/// Malformed parameter text, out-of-range arguments, values outside the
/// domain of an approximation function.
struct DomainError : Error {
  using Error::Error;
};

/// The operation requires an irrational parameter (or a parameter that is
/// not a decimal literal) and was handed something else.
struct IrrationalRequired : Error {
  using Error::Error;
};

/// An integer linear form k1*a + k2*b evaluated exactly to an integer.
struct DependenceDetected : Error {
  DependenceDetected(std::int64_t k1, std::int64_t k2)
      : Error("linear dependence detected at (" + std::to_string(k1) + ", " +
              std::to_string(k2) + ")"),
        k1(k1), k2(k2) {}
  std::int64_t k1;
  std::int64_t k2;
};

struct NotADivisor : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mdl
