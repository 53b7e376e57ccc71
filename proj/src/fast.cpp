#include "mdl/fast.hpp"

#include <algorithm>
#include <cfloat>

namespace mdl {

namespace {

constexpr long double kRound = 0x1p-62L;  // > one rounding of a long double op
constexpr long double kInflate = 1.0L + 0x1p-58L;
constexpr long double kTransc = 0x1p-50L;
constexpr long double kTiny = 0x1p-16000L;

Approx finish(long double v, long double e) { return {v, e * kInflate + std::fabs(v) * kRound + kTiny}; }

mpz_class u128_to_mpz(u128 x) {
  mpz_class hi(static_cast<unsigned long>(x >> 64));
  mpz_class lo(static_cast<unsigned long>(x));
  return (hi << 64) + lo;
}

u128 mpz_to_u128(const mpz_class& z) {
  mpz_class lo = z & ((mpz_class(1) << 64) - 1);
  mpz_class hi = (z >> 64) & ((mpz_class(1) << 64) - 1);
  return (u128(hi.get_ui()) << 64) | u128(lo.get_ui());
}

long double u128_to_ld(u128 x) { return static_cast<long double>(x); }

}  // namespace

Approx Approx::ratio(long double a, long double b) { return finish(a / b, 0); }

Approx Approx::from(const mpq_class& q) {
  const long double v = static_cast<long double>(q.get_d());
  return {v, std::fabs(v) * 0x1p-51L + kTiny};
}

Approx Approx::from(const Enclosure& e) {
  const Approx lo = from(e.lo), hi = from(e.hi);
  const long double v = (lo.v + hi.v) / 2;
  return finish(v, std::max(v - lo.lo(), hi.hi() - v));
}

Enclosure Approx::enclosure() const {
  // Step the endpoints outward by one more rounding so the subtraction and
  // addition themselves are covered.
  const long double l = lo(), h = hi();
  return {to_rational(l - std::fabs(l) * kRound - kTiny), to_rational(h + std::fabs(h) * kRound + kTiny)};
}

Approx operator+(Approx a, Approx b) { return finish(a.v + b.v, a.e + b.e); }
Approx operator-(Approx a, Approx b) { return finish(a.v - b.v, a.e + b.e); }

Approx operator*(Approx a, Approx b) {
  return finish(a.v * b.v, std::fabs(a.v) * b.e + std::fabs(b.v) * a.e + a.e * b.e);
}

Approx operator/(Approx a, Approx b) {
  const long double blo = std::fabs(b.v) - b.e;
  if (!(blo > 0)) return {a.v, LDBL_MAX};
  const long double q = a.v / b.v;
  // |a/b - av/bv| <= (a.e + |q| b.e) / (|bv| - b.e)
  return finish(q, (a.e + std::fabs(q) * b.e) / blo * kInflate);
}

Approx log2(Approx a) {
  const long double lo = a.lo();
  if (!(lo > 0)) return {0, LDBL_MAX};
  const long double v = log2l(a.v);
  const long double e = a.e / (lo * 0.69314718055994530941L) * kInflate;
  return finish(v, e + std::fabs(v) * kTransc + kTransc * 0x1p-60L);
}

Approx exp2(Approx a) {
  const long double v = exp2l(a.v);
  const long double spread = exp2l(a.v + a.e) - v;
  return finish(v, spread * (1 + kTransc * 4) + v * kTransc);
}

Approx pow(Approx base, Approx exponent) { return exp2(exponent * log2(base)); }

Approx sqrt(Approx a) {
  const long double lo = a.lo();
  if (!(lo > 0)) return {sqrtl(std::max(a.v, 0.0L)), sqrtl(std::max(a.hi(), 0.0L)) + kTiny};
  const long double v = sqrtl(a.v);
  return finish(v, a.e / (2 * sqrtl(lo)) * kInflate);
}

Approx max(Approx a, Approx b) {
  const long double lo = std::max(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi());
  return finish((lo + hi) / 2, (hi - lo) / 2);
}

Approx min(Approx a, Approx b) {
  const long double lo = std::min(a.lo(), b.lo()), hi = std::min(a.hi(), b.hi());
  return finish((lo + hi) / 2, (hi - lo) / 2);
}

mpq_class to_rational(long double x) {
  if (x == 0) return 0;
  int exp = 0;
  const long double m = frexpl(x, &exp);            // x = m * 2^exp, |m| in [0.5, 1)
  const long double scaled = ldexpl(m, 64);         // integral, fits in 64 bits
  const bool neg = scaled < 0;
  const auto mag = static_cast<unsigned long>(neg ? -scaled : scaled);
  mpz_class num(mag);
  if (neg) num = -num;
  const long shift = static_cast<long>(exp) - 64;
  if (shift >= 0) return mpq_class(num << shift);
  mpq_class q(num, mpz_class(1) << (-shift));
  q.canonicalize();
  return q;
}

FixedAngle FixedAngle::of(const RealExpr& x) {
  if (x.is_rational()) {
    const mpq_class& q = x.offset();
    mpz_class n;
    mpz_fdiv_q(n.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    const mpq_class f = (q - mpq_class(n)) * mpq_class(mpz_class(1) << 128);
    mpz_class lo;
    mpz_fdiv_q(lo.get_mpz_t(), f.get_num_mpz_t(), f.get_den_mpz_t());
    const bool exact = f.get_den() == 1;
    return {mpz_to_u128(lo), exact ? u128(0) : u128(1)};
  }
  const Interval i = x.interval(320);
  const mpq_class lo = i.lo_q(), hi = i.hi_q();
  mpz_class n;
  mpz_fdiv_q(n.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
  const mpq_class scale(mpz_class(1) << 128);
  const mpq_class l = (lo - mpq_class(n)) * scale, h = (hi - mpq_class(n)) * scale;
  mpz_class lz, hz;
  mpz_fdiv_q(lz.get_mpz_t(), l.get_num_mpz_t(), l.get_den_mpz_t());
  mpz_cdiv_q(hz.get_mpz_t(), h.get_num_mpz_t(), h.get_den_mpz_t());
  const mpz_class w = hz - lz;
  if (w >= (mpz_class(1) << 120)) return {0, kUnusable};
  const mpz_class center = lz + w / 2;
  const mpz_class err = w - w / 2 + 1;
  return {mpz_to_u128(center & ((mpz_class(1) << 128) - 1)), mpz_to_u128(err)};
}

FixedAngle FixedAngle::times(std::int64_t k) const {
  const u128 mag = k < 0 ? u128(-(k + 1)) + 1 : u128(k);
  FixedAngle r;
  r.value = value * static_cast<u128>(static_cast<__int128>(k));
  if (mag != 0 && err > kUnusable / mag) {
    r.err = kUnusable;
  } else {
    r.err = err * mag;
  }
  return r;
}

FixedAngle operator+(const FixedAngle& a, const FixedAngle& b) {
  const u128 e = a.err + b.err;
  return {a.value + b.value, e < a.err ? FixedAngle::kUnusable : e};
}

FixedAngle operator-(const FixedAngle& a, const FixedAngle& b) {
  const u128 e = a.err + b.err;
  return {a.value - b.value, e < a.err ? FixedAngle::kUnusable : e};
}

Approx FixedAngle::dist() const {
  if (!usable()) return {0.25L, 0.25L};
  const u128 half = u128(1) << 127;
  const u128 d = value <= half ? value : u128(0) - value;
  const long double v = ldexpl(u128_to_ld(d), -128);
  return finish(v, ldexpl(u128_to_ld(err), -128) * kInflate);
}

Approx FixedAngle::frac01() const {
  if (!usable()) return {0.5L, 0.5L};
  const long double v = ldexpl(u128_to_ld(value), -128);
  return finish(v, ldexpl(u128_to_ld(err), -128) * kInflate);
}

Enclosure FixedAngle::frac01_enclosure() const {
  const mpq_class scale(mpz_class(1) << 128);
  const mpz_class v = u128_to_mpz(value), e = u128_to_mpz(err);
  return {mpq_class(v - e) / scale, mpq_class(v + e) / scale};
}

}  // namespace mdl
