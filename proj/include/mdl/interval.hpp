#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <string>

namespace mdl {

/// Closed interval [lo, hi] with MPFR endpoints. Every operation rounds the
/// lower endpoint down and the upper endpoint up, so the result always
/// contains the exact result of the operation applied to any members.
class Interval {
 public:
  explicit Interval(mpfr_prec_t prec = 128);
  Interval(long value, mpfr_prec_t prec);
  Interval(const mpq_class& value, mpfr_prec_t prec);
  Interval(const mpq_class& lo, const mpq_class& hi, mpfr_prec_t prec);
  Interval(const Interval& other);
  Interval(Interval&& other) noexcept;
  Interval& operator=(const Interval& other);
  Interval& operator=(Interval&& other) noexcept;
  ~Interval();

  static Interval pi(mpfr_prec_t prec);
  static Interval euler(mpfr_prec_t prec);
  static Interval sqrt_of(unsigned long n, mpfr_prec_t prec);
  static Interval log2_of(unsigned long n, mpfr_prec_t prec);

  mpfr_prec_t precision() const { return mpfr_get_prec(lo_); }
  mpfr_srcptr lo() const { return lo_; }
  mpfr_srcptr hi() const { return hi_; }
  mpfr_ptr lo_mut() { return lo_; }
  mpfr_ptr hi_mut() { return hi_; }

  mpq_class lo_q() const;
  mpq_class hi_q() const;
  double lo_d() const { return mpfr_get_d(lo_, MPFR_RNDD); }
  double hi_d() const { return mpfr_get_d(hi_, MPFR_RNDU); }
  double mid_d() const;

  bool is_positive() const { return mpfr_sgn(lo_) > 0; }
  bool is_negative() const { return mpfr_sgn(hi_) < 0; }
  bool contains_zero() const { return !is_positive() && !is_negative(); }
  bool is_point() const { return mpfr_equal_p(lo_, hi_) != 0; }
  /// True when every member is strictly below every member of `other`.
  bool certainly_below(const Interval& other) const;

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
  Interval& operator/=(const Interval& o);
  Interval& add(const mpq_class& q);
  Interval& mul(const mpz_class& z);
  Interval& mul_si(long v);
  Interval& div_ui(unsigned long v);

  Interval operator-() const;
  friend Interval operator+(Interval a, const Interval& b) { return a += b; }
  friend Interval operator-(Interval a, const Interval& b) { return a -= b; }
  friend Interval operator*(Interval a, const Interval& b) { return a *= b; }
  friend Interval operator/(Interval a, const Interval& b) { return a /= b; }

  friend Interval abs(const Interval& x);
  friend Interval log2(const Interval& x);
  friend Interval exp2(const Interval& x);
  friend Interval sqrt(const Interval& x);
  /// base^exponent for a positive base.
  friend Interval pow(const Interval& base, const Interval& exponent);
  friend Interval min(const Interval& a, const Interval& b);
  friend Interval max(const Interval& a, const Interval& b);
  /// Convex hull.
  friend Interval hull(const Interval& a, const Interval& b);

  std::string to_string(int digits = 20) const;

 private:
  mpfr_t lo_;
  mpfr_t hi_;
};

}  // namespace mdl
