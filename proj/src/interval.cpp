#include "mdl/interval.hpp"

#include <stdexcept>
#include <utility>

namespace mdl {

namespace {

mpq_class to_q(mpfr_srcptr x) {
  mpq_class q;
  mpfr_get_q(q.get_mpq_t(), x);
  return q;
}

}  // namespace

Interval::Interval(mpfr_prec_t prec) {
  mpfr_init2(lo_, prec);
  mpfr_init2(hi_, prec);
  mpfr_set_zero(lo_, 1);
  mpfr_set_zero(hi_, 1);
}

Interval::Interval(long value, mpfr_prec_t prec) {
  mpfr_init2(lo_, prec);
  mpfr_init2(hi_, prec);
  mpfr_set_si(lo_, value, MPFR_RNDD);
  mpfr_set_si(hi_, value, MPFR_RNDU);
}

Interval::Interval(const mpq_class& value, mpfr_prec_t prec) {
  mpfr_init2(lo_, prec);
  mpfr_init2(hi_, prec);
  mpfr_set_q(lo_, value.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(hi_, value.get_mpq_t(), MPFR_RNDU);
}

Interval::Interval(const mpq_class& lo, const mpq_class& hi, mpfr_prec_t prec) {
  mpfr_init2(lo_, prec);
  mpfr_init2(hi_, prec);
  mpfr_set_q(lo_, lo.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(hi_, hi.get_mpq_t(), MPFR_RNDU);
}

Interval::Interval(const Interval& other) {
  mpfr_init2(lo_, other.precision());
  mpfr_init2(hi_, other.precision());
  mpfr_set(lo_, other.lo_, MPFR_RNDD);
  mpfr_set(hi_, other.hi_, MPFR_RNDU);
}

Interval::Interval(Interval&& other) noexcept {
  mpfr_init2(lo_, MPFR_PREC_MIN);
  mpfr_init2(hi_, MPFR_PREC_MIN);
  mpfr_swap(lo_, other.lo_);
  mpfr_swap(hi_, other.hi_);
}

Interval& Interval::operator=(const Interval& other) {
  if (this != &other) {
    mpfr_set_prec(lo_, other.precision());
    mpfr_set_prec(hi_, other.precision());
    mpfr_set(lo_, other.lo_, MPFR_RNDD);
    mpfr_set(hi_, other.hi_, MPFR_RNDU);
  }
  return *this;
}

Interval& Interval::operator=(Interval&& other) noexcept {
  mpfr_swap(lo_, other.lo_);
  mpfr_swap(hi_, other.hi_);
  return *this;
}

Interval::~Interval() {
  mpfr_clear(lo_);
  mpfr_clear(hi_);
}

Interval Interval::pi(mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_const_pi(r.lo_, MPFR_RNDD);
  mpfr_const_pi(r.hi_, MPFR_RNDU);
  return r;
}

Interval Interval::euler(mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_set_ui(r.lo_, 1, MPFR_RNDN);
  mpfr_set_ui(r.hi_, 1, MPFR_RNDN);
  mpfr_exp(r.lo_, r.lo_, MPFR_RNDD);
  mpfr_exp(r.hi_, r.hi_, MPFR_RNDU);
  return r;
}

Interval Interval::sqrt_of(unsigned long n, mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_sqrt_ui(r.lo_, n, MPFR_RNDD);
  mpfr_sqrt_ui(r.hi_, n, MPFR_RNDU);
  return r;
}

Interval Interval::log2_of(unsigned long n, mpfr_prec_t prec) {
  Interval r(prec < 64 ? 64 : prec);
  mpfr_set_ui(r.lo_, n, MPFR_RNDN);  // exact: precision >= 64
  mpfr_set_ui(r.hi_, n, MPFR_RNDN);
  mpfr_log2(r.lo_, r.lo_, MPFR_RNDD);
  mpfr_log2(r.hi_, r.hi_, MPFR_RNDU);
  return r;
}

mpq_class Interval::lo_q() const { return to_q(lo_); }
mpq_class Interval::hi_q() const { return to_q(hi_); }

double Interval::mid_d() const {
  return 0.5 * (mpfr_get_d(lo_, MPFR_RNDN) + mpfr_get_d(hi_, MPFR_RNDN));
}

bool Interval::certainly_below(const Interval& other) const {
  return mpfr_less_p(hi_, other.lo_) != 0;
}

Interval& Interval::operator+=(const Interval& o) {
  mpfr_add(lo_, lo_, o.lo_, MPFR_RNDD);
  mpfr_add(hi_, hi_, o.hi_, MPFR_RNDU);
  return *this;
}

Interval& Interval::operator-=(const Interval& o) {
  // Writing lo before reading it for hi would alias when &o == this.
  Interval tmp(o);
  mpfr_sub(lo_, lo_, tmp.hi_, MPFR_RNDD);
  mpfr_sub(hi_, hi_, tmp.lo_, MPFR_RNDU);
  return *this;
}

Interval& Interval::operator*=(const Interval& o) {
  const mpfr_prec_t p = precision();
  mpfr_t c[4];
  for (auto& x : c) mpfr_init2(x, p);
  mpfr_mul(c[0], lo_, o.lo_, MPFR_RNDD);
  mpfr_mul(c[1], lo_, o.hi_, MPFR_RNDD);
  mpfr_mul(c[2], hi_, o.lo_, MPFR_RNDD);
  mpfr_mul(c[3], hi_, o.hi_, MPFR_RNDD);
  mpfr_t lo;
  mpfr_init2(lo, p);
  mpfr_min(lo, c[0], c[1], MPFR_RNDD);
  mpfr_min(lo, lo, c[2], MPFR_RNDD);
  mpfr_min(lo, lo, c[3], MPFR_RNDD);
  mpfr_mul(c[0], lo_, o.lo_, MPFR_RNDU);
  mpfr_mul(c[1], lo_, o.hi_, MPFR_RNDU);
  mpfr_mul(c[2], hi_, o.lo_, MPFR_RNDU);
  mpfr_mul(c[3], hi_, o.hi_, MPFR_RNDU);
  mpfr_max(hi_, c[0], c[1], MPFR_RNDU);
  mpfr_max(hi_, hi_, c[2], MPFR_RNDU);
  mpfr_max(hi_, hi_, c[3], MPFR_RNDU);
  mpfr_swap(lo_, lo);
  mpfr_clear(lo);
  for (auto& x : c) mpfr_clear(x);
  return *this;
}

Interval& Interval::operator/=(const Interval& o) {
  if (o.contains_zero()) throw std::domain_error("interval division by an interval containing zero");
  Interval inv(o.precision() > precision() ? o.precision() : precision());
  mpfr_ui_div(inv.lo_, 1, o.hi_, MPFR_RNDD);
  mpfr_ui_div(inv.hi_, 1, o.lo_, MPFR_RNDU);
  return *this *= inv;
}

Interval& Interval::add(const mpq_class& q) {
  mpfr_add_q(lo_, lo_, q.get_mpq_t(), MPFR_RNDD);
  mpfr_add_q(hi_, hi_, q.get_mpq_t(), MPFR_RNDU);
  return *this;
}

Interval& Interval::mul(const mpz_class& z) {
  if (sgn(z) < 0) mpfr_swap(lo_, hi_);
  mpfr_mul_z(lo_, lo_, z.get_mpz_t(), MPFR_RNDD);
  mpfr_mul_z(hi_, hi_, z.get_mpz_t(), MPFR_RNDU);
  return *this;
}

Interval& Interval::mul_si(long v) {
  if (v < 0) mpfr_swap(lo_, hi_);
  mpfr_mul_si(lo_, lo_, v, MPFR_RNDD);
  mpfr_mul_si(hi_, hi_, v, MPFR_RNDU);
  return *this;
}

Interval& Interval::div_ui(unsigned long v) {
  if (v == 0) throw std::domain_error("division by zero");
  mpfr_div_ui(lo_, lo_, v, MPFR_RNDD);
  mpfr_div_ui(hi_, hi_, v, MPFR_RNDU);
  return *this;
}

Interval Interval::operator-() const {
  Interval r(precision());
  mpfr_neg(r.lo_, hi_, MPFR_RNDD);
  mpfr_neg(r.hi_, lo_, MPFR_RNDU);
  return r;
}

Interval abs(const Interval& x) {
  if (x.is_positive() || mpfr_sgn(x.lo_) == 0) return x;
  if (x.is_negative() || mpfr_sgn(x.hi_) == 0) return -x;
  Interval r(x.precision());
  mpfr_set_zero(r.lo_, 1);
  mpfr_t nlo;
  mpfr_init2(nlo, x.precision());
  mpfr_neg(nlo, x.lo_, MPFR_RNDU);
  mpfr_max(r.hi_, nlo, x.hi_, MPFR_RNDU);
  mpfr_clear(nlo);
  return r;
}

Interval log2(const Interval& x) {
  if (!x.is_positive()) throw std::domain_error("log2 of an interval that is not positive");
  Interval r(x.precision());
  mpfr_log2(r.lo_, x.lo_, MPFR_RNDD);
  mpfr_log2(r.hi_, x.hi_, MPFR_RNDU);
  return r;
}

Interval exp2(const Interval& x) {
  Interval r(x.precision());
  mpfr_exp2(r.lo_, x.lo_, MPFR_RNDD);
  mpfr_exp2(r.hi_, x.hi_, MPFR_RNDU);
  return r;
}

Interval sqrt(const Interval& x) {
  if (x.is_negative()) throw std::domain_error("sqrt of a negative interval");
  Interval r(x.precision());
  if (mpfr_sgn(x.lo_) <= 0) {
    mpfr_set_zero(r.lo_, 1);
  } else {
    mpfr_sqrt(r.lo_, x.lo_, MPFR_RNDD);
  }
  mpfr_sqrt(r.hi_, x.hi_, MPFR_RNDU);
  return r;
}

Interval pow(const Interval& base, const Interval& exponent) {
  return exp2(exponent * log2(base));
}

Interval min(const Interval& a, const Interval& b) {
  Interval r(a.precision());
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_min(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Interval max(const Interval& a, const Interval& b) {
  Interval r(a.precision());
  mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Interval hull(const Interval& a, const Interval& b) {
  Interval r(a.precision());
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

std::string Interval::to_string(int digits) const {
  char* lo = nullptr;
  char* hi = nullptr;
  mpfr_asprintf(&lo, "%.*RDg", digits, lo_);
  mpfr_asprintf(&hi, "%.*RUg", digits, hi_);
  std::string s = std::string("[") + lo + ", " + hi + "]";
  mpfr_free_str(lo);
  mpfr_free_str(hi);
  return s;
}

}  // namespace mdl
