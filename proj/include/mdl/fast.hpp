#pragma once

// Fast certified filters used by the large sweeps.
//
// FixedAngle stores a point of the circle R/Z as a 128-bit fraction together
// with an error radius in the same units; multiples and sums are exact
// wrapping integer arithmetic, so the orbit q*alpha mod 1 is carried without
// re-evaluating q*alpha. Approx is a long-double ball (center, radius) whose
// radius absorbs every rounding error. Both only ever answer "certainly
// less/greater"; anything closer falls through to the MPFR path in realnum.
//
// Transcendental functions (log2l, exp2l) are assumed accurate to 2^-50
// relative, a wide margin over glibc's documented few-ulp bounds.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <optional>

#include "mdl/realnum.hpp"

namespace mdl {

using u128 = unsigned __int128;

struct Approx {
  long double v = 0;
  long double e = 0;

  static Approx exact(long double x) { return {x, 0}; }
  /// a / b for integers a, b exactly representable as long double.
  static Approx ratio(long double a, long double b);
  static Approx from(const mpq_class& q);
  static Approx from(const Enclosure& e);

  long double lo() const { return v - e; }
  long double hi() const { return v + e; }
  bool positive() const { return lo() > 0; }
  /// Enclosure with exact long-double endpoints, rounded outward.
  Enclosure enclosure() const;

  friend Approx operator+(Approx a, Approx b);
  friend Approx operator-(Approx a, Approx b);
  friend Approx operator*(Approx a, Approx b);
  friend Approx operator/(Approx a, Approx b);
  friend Approx log2(Approx a);
  friend Approx exp2(Approx a);
  friend Approx pow(Approx base, Approx exponent);
  friend Approx sqrt(Approx a);
  friend Approx max(Approx a, Approx b);
  friend Approx min(Approx a, Approx b);
};

/// true: a < b certainly; false: a > b certainly; nullopt: overlapping.
inline std::optional<bool> certainly_less(const Approx& a, const Approx& b) {
  if (a.hi() < b.lo()) return true;
  if (a.lo() > b.hi()) return false;
  return std::nullopt;
}

/// Exact long double -> rational.
mpq_class to_rational(long double x);

struct FixedAngle {
  u128 value = 0;  ///< x mod 1 ~ value / 2^128
  u128 err = 0;    ///< circular error bound in units of 2^-128

  static constexpr u128 kUnusable = ~u128(0);

  /// From an arbitrary expression (evaluated once at high precision).
  static FixedAngle of(const RealExpr& x);
  /// Exact angle k / 2^64.
  static FixedAngle from_u64_fraction(std::uint64_t k) { return {u128(k) << 64, 0}; }

  bool usable() const { return err < (u128(1) << 112); }

  FixedAngle times(std::int64_t k) const;
  friend FixedAngle operator+(const FixedAngle& a, const FixedAngle& b);
  friend FixedAngle operator-(const FixedAngle& a, const FixedAngle& b);

  /// Ball for ||x||.
  Approx dist() const;
  /// Ball for x mod 1 in [0, 1). Only meaningful when wrap_safe().
  Approx frac01() const;
  /// The ball does not cross the cut at 0.
  bool wrap_safe() const { return usable() && value >= err && value <= ~u128(0) - err; }
  /// Exact rational bounds for x mod 1 when wrap_safe().
  Enclosure frac01_enclosure() const;
};

}  // namespace mdl
