#pragma once

// Rigorous evaluation of real parameters and integer-linear expressions in
// them. Every real quantity in the library is ultimately decided here: an
// expression is evaluated to a rational enclosure whose width shrinks as the
// requested precision grows, and comparisons against rationals escalate the
// precision geometrically until the enclosure separates from the target or
// the precision cap is reached.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdl/interval.hpp"

namespace mdl {

/// Precision cap in bits for every escalation loop. Default 4096.
long precision_cap();
void set_precision_cap(long bits);

/// Starting precision of escalation loops.
inline constexpr long kInitialBits = 64;

/// Closed rational interval [lo, hi] known to contain a real quantity.
struct Enclosure {
  mpq_class lo;
  mpq_class hi;

  static Enclosure exact(const mpq_class& v) { return {v, v}; }
  static Enclosure from_interval(const Interval& x) { return {x.lo_q(), x.hi_q()}; }

  mpq_class width() const { return hi - lo; }
  mpq_class mid() const { return (lo + hi) / 2; }
  mpq_class radius() const { return (hi - lo) / 2; }
  bool is_exact() const { return lo == hi; }
  bool contains(const mpq_class& v) const { return lo <= v && v <= hi; }
  bool contains(const Enclosure& o) const { return lo <= o.lo && o.hi <= hi; }
  bool overlaps(const Enclosure& o) const { return lo <= o.hi && o.lo <= hi; }
  double approx() const { return mid().get_d(); }
  Interval interval(mpfr_prec_t prec) const { return Interval(lo, hi, prec); }

  /// Outward rounding to dyadic endpoints with at most `bits` fractional
  /// bits; keeps printed output short.
  Enclosure coarsened(long bits) const;

  friend Enclosure operator+(const Enclosure& a, const Enclosure& b) {
    return {a.lo + b.lo, a.hi + b.hi};
  }
  friend Enclosure operator-(const Enclosure& a, const Enclosure& b) {
    return {a.lo - b.hi, a.hi - b.lo};
  }
  friend bool operator==(const Enclosure& a, const Enclosure& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

std::ostream& operator<<(std::ostream& os, const Enclosure& e);

enum class Ordering { less, equal, greater, undecided };

const char* to_string(Ordering o);

enum class ParamKind { rational, sqrt, log2, constant, decimal };
enum class Constant { e, pi, golden };

class RealExpr;

/// One real parameter in the `kind:value` grammar:
/// `rat:3/7`, `sqrt:2`, `log2:3`, `const:golden`, `dec:1.4142135@1e-7`.
class RealParam {
 public:
  static RealParam rational(const mpq_class& value);
  /// n >= 2, not a perfect square.
  static RealParam sqrt(unsigned long n);
  /// n >= 3, not a power of two.
  static RealParam log2(unsigned long n);
  static RealParam constant(Constant c);
  /// A decimal approximation known only to within `radius`.
  static RealParam decimal(const mpq_class& center, const mpq_class& radius);
  static RealParam parse(std::string_view text);

  ParamKind kind() const { return kind_; }
  /// Evaluates with zero-width enclosure.
  bool is_exact() const { return kind_ == ParamKind::rational; }
  /// Known to be irrational. Decimal literals are neither exact nor
  /// irrational: their value is only bracketed.
  bool is_irrational() const {
    return kind_ == ParamKind::sqrt || kind_ == ParamKind::log2 || kind_ == ParamKind::constant;
  }
  bool is_literal() const { return kind_ == ParamKind::decimal; }

  const mpq_class& rational_value() const { return value_; }
  unsigned long argument() const { return n_; }
  Constant constant_id() const { return constant_; }
  const mpq_class& decimal_center() const { return value_; }
  const mpq_class& decimal_radius() const { return radius_; }

  std::string to_string() const;
  RealExpr expr() const;

  friend bool operator==(const RealParam&, const RealParam&) = default;

 private:
  RealParam() = default;
  ParamKind kind_ = ParamKind::rational;
  mpq_class value_;
  mpq_class radius_;
  unsigned long n_ = 0;
  Constant constant_ = Constant::e;
};

/// Irreducible building block of an expression. sqrt atoms are squarefree,
/// log2 atoms are odd primes, so that syntactically different spellings of
/// the same number (sqrt:8 and 2*sqrt:2, log2:12 and 2+log2:3) cancel.
struct Atom {
  enum class Kind { sqrt, log2, pi, e, golden, decimal };
  Kind kind = Kind::sqrt;
  unsigned long n = 0;
  mpq_class center;
  mpq_class radius;

  Interval interval(mpfr_prec_t prec) const;
  bool is_literal() const { return kind == Kind::decimal; }
  std::strong_ordering operator<=>(const Atom& o) const;
  bool operator==(const Atom& o) const { return (*this <=> o) == 0; }
};

struct Term {
  mpz_class coefficient;
  Atom atom;
};

/// Integer-linear combination of atoms plus a rational offset. Terms are
/// kept sorted by atom with nonzero, merged coefficients.
class RealExpr {
 public:
  RealExpr() = default;
  RealExpr(const mpq_class& value) : offset_(value) {}  // NOLINT: implicit by design of the algebra
  RealExpr(long value) : offset_(value) {}              // NOLINT
  RealExpr(const RealParam& p) : RealExpr(p.expr()) {}  // NOLINT

  static RealExpr from_atom(const Atom& atom, const mpz_class& coefficient = 1);

  bool is_rational() const { return terms_.empty(); }
  bool has_literal() const;
  const mpq_class& offset() const { return offset_; }
  std::span<const Term> terms() const { return terms_; }

  /// Enclosure at working precision `prec` (not a width guarantee).
  Interval interval(mpfr_prec_t prec) const;

  RealExpr& operator+=(const RealExpr& o);
  RealExpr& operator-=(const RealExpr& o);
  RealExpr& operator*=(const mpz_class& k);
  RealExpr operator-() const;
  friend RealExpr operator+(RealExpr a, const RealExpr& b) { return a += b; }
  friend RealExpr operator-(RealExpr a, const RealExpr& b) { return a -= b; }
  friend RealExpr operator*(const mpz_class& k, RealExpr a) { return a *= k; }
  friend RealExpr operator*(long k, RealExpr a) { return a *= mpz_class(k); }

  std::string to_string() const;

 private:
  void add_term(const mpz_class& c, const Atom& a);
  std::vector<Term> terms_;
  mpq_class offset_;
};

/// Enclosure of width <= 2^-bits. Decimal literals cannot be refined below
/// their declared radius; for expressions containing them the width is
/// bounded by max(2^-bits, 2 * sum |c_i| r_i) instead.
/// Throws CapExceeded if bits > precision_cap().
Enclosure eval(const RealExpr& x, long bits);

struct FracDist {
  Enclosure frac;  ///< signed fractional part in (-1/2, 1/2]
  Enclosure dist;  ///< distance to the nearest integer, in [0, 1/2]
  bool decided = true;  ///< nearest integer certified at this precision
};

/// Signed fractional part {x} and ||x||. When the nearest integer is not
/// certified at `bits`, returns widened enclosures still containing the
/// truth and `decided = false`.
FracDist frac_and_dist(const RealExpr& x, long bits);

/// Sign-style comparison of x against t. EQ only through the exact rational
/// path; UNDECIDED only after the precision cap is exhausted.
Ordering compare(const RealExpr& x, const mpq_class& t);
/// Compares ||x|| against t.
Ordering compare_dist(const RealExpr& x, const mpq_class& t);
/// Compares x mod 1 (taken in [0,1)) against t.
Ordering compare_frac01(const RealExpr& x, const mpq_class& t);

/// Escalation kernel: `enclose(prec)` returns an interval containing a real
/// quantity; precision doubles from kInitialBits until the interval excludes
/// 0 or the cap is reached. Returns the sign as an Ordering against zero.
Ordering decide_sign(const std::function<Interval(mpfr_prec_t)>& enclose);

/// floor(x), escalating precision. Throws CapExceeded if undecidable.
mpz_class floor_of(const RealExpr& x);

/// Enclosure of ||x|| at working precision prec.
Interval dist_interval(const RealExpr& x, mpfr_prec_t prec);
/// Enclosure of x mod 1 in [0,1) at working precision prec; the enclosure
/// may be [0,1] when it straddles an integer.
Interval frac01_interval(const RealExpr& x, mpfr_prec_t prec);

/// Exact rational parsing: "3/7", "-2", "0.125", "1e-7", "1.5e3".
mpq_class parse_rational(std::string_view text);
std::string rational_to_string(const mpq_class& q);

}  // namespace mdl
