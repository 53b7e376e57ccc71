#include "mdl/realnum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mdl/errors.hpp"

namespace mdl {

namespace {

std::atomic<long> g_precision_cap{4096};

bool is_perfect_square(unsigned long n) {
  mpz_class z(n);
  return mpz_perfect_square_p(z.get_mpz_t()) != 0;
}

// n = s^2 * m with m squarefree.
void squarefree_split(unsigned long n, mpz_class& s, unsigned long& m) {
  s = 1;
  m = 1;
  unsigned long r = n;
  for (unsigned long d = 2; d <= (1UL << 22) && d * d <= r; ++d) {
    int e = 0;
    while (r % d == 0) {
      r /= d;
      ++e;
    }
    for (int i = 0; i + 1 < e; i += 2) s *= d;
    if (e % 2 == 1) m *= d;
  }
  // What remains has no prime factor below 2^22, so it is 1, p, p*q or p^2.
  if (r > 1) {
    if (is_perfect_square(r)) {
      mpz_class root;
      mpz_class rz(r);
      mpz_sqrt(root.get_mpz_t(), rz.get_mpz_t());
      s *= root;
    } else {
      m *= r;
    }
  }
}

// n = 2^v * prod p^e over odd p.
void odd_factorization(unsigned long n, unsigned long& v, std::vector<std::pair<unsigned long, unsigned long>>& f) {
  v = 0;
  while (n % 2 == 0) {
    n /= 2;
    ++v;
  }
  for (unsigned long d = 3; d <= (1UL << 22) && d * d <= n; d += 2) {
    unsigned long e = 0;
    while (n % d == 0) {
      n /= d;
      ++e;
    }
    if (e) f.emplace_back(d, e);
  }
  if (n > 1) f.emplace_back(n, 1);
}

bool is_power_of_two(unsigned long n) { return n && !(n & (n - 1)); }

mpz_class parse_integer(std::string_view s) {
  std::string t(s);
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  if (t.empty() || t == "-") throw DomainError("empty integer");
  for (std::size_t i = (t[0] == '-'); i < t.size(); ++i) {
    if (t[i] < '0' || t[i] > '9') throw DomainError("bad integer '" + std::string(s) + "'");
  }
  return mpz_class(t, 10);
}

unsigned long parse_ulong(std::string_view s) {
  mpz_class z = parse_integer(s);
  if (sgn(z) < 0 || !z.fits_ulong_p()) throw DomainError("expected a non-negative integer, got '" + std::string(s) + "'");
  return z.get_ui();
}

// Distance-to-nearest-integer range over [lo, hi].
Enclosure dist_range(const mpq_class& lo, const mpq_class& hi) {
  const mpq_class half(1, 2);
  if (hi - lo >= 1) return {0, half};
  auto dist = [](const mpq_class& x) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    mpq_class fr = x - mpq_class(f);
    return fr <= mpq_class(1, 2) ? fr : mpq_class(1 - fr);
  };
  mpz_class fh;
  mpz_fdiv_q(fh.get_mpz_t(), hi.get_num_mpz_t(), hi.get_den_mpz_t());
  const bool has_integer = mpq_class(fh) >= lo;
  mpq_class hm = hi - half;
  mpz_class fhm;
  mpz_fdiv_q(fhm.get_mpz_t(), hm.get_num_mpz_t(), hm.get_den_mpz_t());
  const bool has_half = mpq_class(fhm) + half >= lo;
  const mpq_class dl = dist(lo), dh = dist(hi);
  return {has_integer ? mpq_class(0) : std::min(dl, dh), has_half ? half : std::max(dl, dh)};
}

mpz_class floor_q(const mpq_class& x) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return f;
}

mpz_class ceil_q(const mpq_class& x) {
  mpz_class f;
  mpz_cdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return f;
}

double magnitude_bits(const RealExpr& x) {
  double m = std::fabs(x.offset().get_d());
  for (const Term& t : x.terms()) {
    double a = 4.0;
    if (t.atom.kind == Atom::Kind::sqrt) a = std::sqrt(static_cast<double>(t.atom.n)) + 1;
    if (t.atom.kind == Atom::Kind::decimal) a = std::fabs(t.atom.center.get_d()) + t.atom.radius.get_d() + 1;
    m += std::fabs(t.coefficient.get_d()) * a;
  }
  return std::log2(m + 2.0) + 2.0 * std::log2(static_cast<double>(x.terms().size()) + 2.0);
}

mpq_class literal_floor(const RealExpr& x) {
  mpq_class w = 0;
  for (const Term& t : x.terms()) {
    if (t.atom.is_literal()) w += 2 * mpq_class(abs(t.coefficient)) * t.atom.radius;
  }
  return w;
}

}  // namespace

long precision_cap() { return g_precision_cap.load(std::memory_order_relaxed); }

void set_precision_cap(long bits) {
  if (bits < kInitialBits) throw DomainError("precision cap must be at least " + std::to_string(kInitialBits));
  g_precision_cap.store(bits, std::memory_order_relaxed);
}

Enclosure Enclosure::coarsened(long bits) const {
  mpz_class scale = mpz_class(1) << bits;
  mpq_class l = lo * scale, h = hi * scale;
  Enclosure out{mpq_class(floor_q(l), scale), mpq_class(ceil_q(h), scale)};
  out.lo.canonicalize();
  out.hi.canonicalize();
  return out;
}

std::ostream& operator<<(std::ostream& os, const Enclosure& e) {
  return os << '[' << e.lo.get_d() << ", " << e.hi.get_d() << ']';
}

const char* to_string(Ordering o) {
  switch (o) {
    case Ordering::less: return "LT";
    case Ordering::equal: return "EQ";
    case Ordering::greater: return "GT";
    case Ordering::undecided: return "UNDECIDED";
  }
  return "?";
}

// ---------------------------------------------------------------- RealParam

RealParam RealParam::rational(const mpq_class& value) {
  RealParam p;
  p.kind_ = ParamKind::rational;
  p.value_ = value;
  p.value_.canonicalize();
  return p;
}

RealParam RealParam::sqrt(unsigned long n) {
  if (n < 2 || is_perfect_square(n)) throw DomainError("sqrt parameter needs a non-square n >= 2, got " + std::to_string(n));
  RealParam p;
  p.kind_ = ParamKind::sqrt;
  p.n_ = n;
  return p;
}

RealParam RealParam::log2(unsigned long n) {
  if (n < 3 || is_power_of_two(n)) throw DomainError("log2 parameter needs n >= 3 not a power of two, got " + std::to_string(n));
  RealParam p;
  p.kind_ = ParamKind::log2;
  p.n_ = n;
  return p;
}

RealParam RealParam::constant(Constant c) {
  RealParam p;
  p.kind_ = ParamKind::constant;
  p.constant_ = c;
  return p;
}

RealParam RealParam::decimal(const mpq_class& center, const mpq_class& radius) {
  if (radius <= 0) throw DomainError("decimal literal needs a positive radius");
  RealParam p;
  p.kind_ = ParamKind::decimal;
  p.value_ = center;
  p.radius_ = radius;
  return p;
}

RealParam RealParam::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DomainError("parameter '" + std::string(text) + "' lacks a kind prefix");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);
  if (kind == "rat") return rational(parse_rational(body));
  if (kind == "sqrt") return sqrt(parse_ulong(body));
  if (kind == "log2") return log2(parse_ulong(body));
  if (kind == "const") {
    if (body == "e") return constant(Constant::e);
    if (body == "pi") return constant(Constant::pi);
    if (body == "golden" || body == "phi") return constant(Constant::golden);
    throw DomainError("unknown constant '" + std::string(body) + "'");
  }
  if (kind == "dec") {
    const auto at = body.find('@');
    const std::string_view digits = body.substr(0, at);
    const mpq_class center = parse_rational(digits);
    mpq_class radius;
    if (at != std::string_view::npos) {
      radius = parse_rational(body.substr(at + 1));
    } else {
      // Half a unit in the last written place.
      const auto dot = digits.find('.');
      const std::size_t places = dot == std::string_view::npos ? 0 : digits.size() - dot - 1;
      mpz_class ten;
      mpz_ui_pow_ui(ten.get_mpz_t(), 10, places);
      radius = mpq_class(1, 2) / mpq_class(ten);
    }
    return decimal(center, radius);
  }
  throw DomainError("unknown parameter kind '" + std::string(kind) + "'");
}

std::string RealParam::to_string() const {
  switch (kind_) {
    case ParamKind::rational: return "rat:" + rational_to_string(value_);
    case ParamKind::sqrt: return "sqrt:" + std::to_string(n_);
    case ParamKind::log2: return "log2:" + std::to_string(n_);
    case ParamKind::constant:
      switch (constant_) {
        case Constant::e: return "const:e";
        case Constant::pi: return "const:pi";
        case Constant::golden: return "const:golden";
      }
      break;
    case ParamKind::decimal: return "dec:" + rational_to_string(value_) + "@" + rational_to_string(radius_);
  }
  return "?";
}

RealExpr RealParam::expr() const {
  switch (kind_) {
    case ParamKind::rational: return RealExpr(value_);
    case ParamKind::sqrt: {
      mpz_class s;
      unsigned long m = 1;
      squarefree_split(n_, s, m);
      Atom a;
      a.kind = Atom::Kind::sqrt;
      a.n = m;
      return RealExpr::from_atom(a, s);
    }
    case ParamKind::log2: {
      unsigned long v = 0;
      std::vector<std::pair<unsigned long, unsigned long>> f;
      odd_factorization(n_, v, f);
      RealExpr r(static_cast<long>(v));
      for (const auto& [p, e] : f) {
        Atom a;
        a.kind = Atom::Kind::log2;
        a.n = p;
        r += RealExpr::from_atom(a, e);
      }
      return r;
    }
    case ParamKind::constant: {
      Atom a;
      a.kind = constant_ == Constant::e ? Atom::Kind::e : constant_ == Constant::pi ? Atom::Kind::pi : Atom::Kind::golden;
      return RealExpr::from_atom(a);
    }
    case ParamKind::decimal: {
      Atom a;
      a.kind = Atom::Kind::decimal;
      a.center = value_;
      a.radius = radius_;
      return RealExpr::from_atom(a);
    }
  }
  return {};
}

// --------------------------------------------------------------------- Atom

Interval Atom::interval(mpfr_prec_t prec) const {
  switch (kind) {
    case Kind::sqrt: return Interval::sqrt_of(n, prec);
    case Kind::log2: return Interval::log2_of(n, prec);
    case Kind::pi: return Interval::pi(prec);
    case Kind::e: return Interval::euler(prec);
    case Kind::golden: {
      Interval r = Interval::sqrt_of(5, prec);
      r.add(mpq_class(1));
      r.div_ui(2);
      return r;
    }
    case Kind::decimal: return Interval(center - radius, center + radius, prec);
  }
  return Interval(prec);
}

std::strong_ordering Atom::operator<=>(const Atom& o) const {
  if (auto c = kind <=> o.kind; c != 0) return c;
  if (auto c = n <=> o.n; c != 0) return c;
  if (int c = cmp(center, o.center); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  if (int c = cmp(radius, o.radius); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

// ----------------------------------------------------------------- RealExpr

RealExpr RealExpr::from_atom(const Atom& atom, const mpz_class& coefficient) {
  RealExpr r;
  r.add_term(coefficient, atom);
  return r;
}

void RealExpr::add_term(const mpz_class& c, const Atom& a) {
  if (c == 0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), a, [](const Term& t, const Atom& x) { return t.atom < x; });
  if (it != terms_.end() && it->atom == a) {
    it->coefficient += c;
    if (it->coefficient == 0) terms_.erase(it);
  } else {
    terms_.insert(it, Term{c, a});
  }
}

bool RealExpr::has_literal() const {
  return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.atom.is_literal(); });
}

RealExpr& RealExpr::operator+=(const RealExpr& o) {
  for (const Term& t : o.terms_) add_term(t.coefficient, t.atom);
  offset_ += o.offset_;
  return *this;
}

RealExpr& RealExpr::operator-=(const RealExpr& o) {
  for (const Term& t : o.terms_) add_term(-t.coefficient, t.atom);
  offset_ -= o.offset_;
  return *this;
}

RealExpr& RealExpr::operator*=(const mpz_class& k) {
  if (k == 0) {
    terms_.clear();
    offset_ = 0;
    return *this;
  }
  for (Term& t : terms_) t.coefficient *= k;
  offset_ *= k;
  return *this;
}

RealExpr RealExpr::operator-() const {
  RealExpr r(*this);
  r *= mpz_class(-1);
  return r;
}

Interval RealExpr::interval(mpfr_prec_t prec) const {
  Interval r(offset_, prec);
  for (const Term& t : terms_) {
    Interval a = t.atom.interval(prec);
    a.mul(t.coefficient);
    r += a;
  }
  return r;
}

std::string RealExpr::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const Term& t : terms_) {
    if (!first) os << " + ";
    first = false;
    os << t.coefficient.get_str() << '*';
    switch (t.atom.kind) {
      case Atom::Kind::sqrt: os << "sqrt(" << t.atom.n << ')'; break;
      case Atom::Kind::log2: os << "log2(" << t.atom.n << ')'; break;
      case Atom::Kind::pi: os << "pi"; break;
      case Atom::Kind::e: os << "e"; break;
      case Atom::Kind::golden: os << "golden"; break;
      case Atom::Kind::decimal: os << "dec(" << rational_to_string(t.atom.center) << '@' << rational_to_string(t.atom.radius) << ')'; break;
    }
  }
  if (offset_ != 0 || first) {
    if (!first) os << " + ";
    os << rational_to_string(offset_);
  }
  return os.str();
}

// --------------------------------------------------------------- operations

Enclosure eval(const RealExpr& x, long bits) {
  if (bits <= 0) throw DomainError("eval needs a positive bit count");
  if (bits > precision_cap()) throw CapExceeded("eval requested " + std::to_string(bits) + " bits above the cap of " + std::to_string(precision_cap()));
  if (x.is_rational()) return Enclosure::exact(x.offset());
  const mpq_class target(mpz_class(1), mpz_class(1) << bits);
  const mpq_class floor_width = literal_floor(x);
  mpfr_prec_t prec = bits + static_cast<mpfr_prec_t>(magnitude_bits(x)) + 16;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Enclosure e = Enclosure::from_interval(x.interval(prec));
    const mpq_class w = e.width();
    if (w <= target || (floor_width > 0 && w <= floor_width + target)) return e;
    prec *= 2;
  }
  throw CapExceeded("eval did not reach the requested width");
}

FracDist frac_and_dist(const RealExpr& x, long bits) {
  const Enclosure e = eval(x, bits);
  const mpq_class half(1, 2);
  const mpz_class n_lo = ceil_q(e.lo - half);
  const mpz_class n_hi = ceil_q(e.hi - half);
  FracDist r;
  if (n_lo == n_hi) {
    r.frac = {e.lo - n_lo, e.hi - n_lo};
    r.dist = dist_range(r.frac.lo, r.frac.hi);
    r.decided = true;
  } else {
    r.frac = {-half, half};
    r.dist = dist_range(e.lo, e.hi);
    r.decided = false;
  }
  return r;
}

Ordering decide_sign(const std::function<Interval(mpfr_prec_t)>& enclose) {
  const long cap = precision_cap();
  long bits = std::min(kInitialBits, cap);
  while (true) {
    const Interval i = enclose(bits + 32);
    if (i.is_positive()) return Ordering::greater;
    if (i.is_negative()) return Ordering::less;
    if (bits >= cap) return Ordering::undecided;
    bits = std::min(bits * 2, cap);
  }
}

Ordering compare(const RealExpr& x, const mpq_class& t) {
  if (x.is_rational()) {
    const int c = cmp(x.offset(), t);
    return c < 0 ? Ordering::less : c > 0 ? Ordering::greater : Ordering::equal;
  }
  const RealExpr d = x - RealExpr(t);
  const auto extra = static_cast<mpfr_prec_t>(magnitude_bits(d));
  return decide_sign([&](mpfr_prec_t p) { return d.interval(p + extra); });
}

Interval dist_interval(const RealExpr& x, mpfr_prec_t prec) {
  const Interval i = x.interval(prec);
  const Enclosure d = dist_range(i.lo_q(), i.hi_q());
  return Interval(d.lo, d.hi, prec);
}

Interval frac01_interval(const RealExpr& x, mpfr_prec_t prec) {
  const Interval i = x.interval(prec);
  const mpq_class lo = i.lo_q(), hi = i.hi_q();
  const mpz_class fl = floor_q(lo), fh = floor_q(hi);
  if (fl != fh) return Interval(mpq_class(0), mpq_class(1), prec);
  return Interval(lo - fl, hi - fl, prec);
}

Ordering compare_dist(const RealExpr& x, const mpq_class& t) {
  if (x.is_rational()) {
    const Enclosure d = dist_range(x.offset(), x.offset());
    const int c = cmp(d.lo, t);
    return c < 0 ? Ordering::less : c > 0 ? Ordering::greater : Ordering::equal;
  }
  const auto extra = static_cast<mpfr_prec_t>(magnitude_bits(x));
  return decide_sign([&](mpfr_prec_t p) {
    Interval d = dist_interval(x, p + extra);
    d.add(-t);
    return d;
  });
}

mpz_class floor_of(const RealExpr& x) {
  if (x.is_rational()) return floor_q(x.offset());
  const auto extra = static_cast<mpfr_prec_t>(magnitude_bits(x));
  for (long bits = kInitialBits;; bits = std::min(bits * 2, precision_cap())) {
    const Interval i = x.interval(bits + 32 + extra);
    const mpz_class fl = floor_q(i.lo_q());
    const mpq_class hi = i.hi_q();
    // hi strictly below the next integer certifies the floor.
    if (hi < mpq_class(fl + 1)) return fl;
    if (bits >= precision_cap()) throw CapExceeded("floor undecided at the precision cap for " + x.to_string());
  }
}

Ordering compare_frac01(const RealExpr& x, const mpq_class& t) {
  const mpz_class n = floor_of(x);
  return compare(x - RealExpr(mpq_class(n)), t);
}

mpq_class parse_rational(std::string_view text) {
  if (text.empty()) throw DomainError("empty number");
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    const mpz_class num = parse_integer(text.substr(0, slash));
    const mpz_class den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw DomainError("zero denominator in '" + std::string(text) + "'");
    mpq_class q(num, den);
    q.canonicalize();
    return q;
  }
  std::string_view mant = text;
  long exponent = 0;
  const auto epos = text.find_first_of("eE");
  if (epos != std::string_view::npos) {
    mant = text.substr(0, epos);
    const mpz_class e = parse_integer(text.substr(epos + 1));
    if (!e.fits_slong_p() || abs(e) > 100000) throw DomainError("exponent out of range in '" + std::string(text) + "'");
    exponent = e.get_si();
  }
  bool negative = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    negative = mant[0] == '-';
    mant.remove_prefix(1);
  }
  std::string digits;
  long places = 0;
  bool seen_dot = false;
  for (char c : mant) {
    if (c == '.') {
      if (seen_dot) throw DomainError("bad number '" + std::string(text) + "'");
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_dot) ++places;
    } else {
      throw DomainError("bad number '" + std::string(text) + "'");
    }
  }
  if (digits.empty()) throw DomainError("bad number '" + std::string(text) + "'");
  mpz_class num(digits, 10);
  if (negative) num = -num;
  const long shift = exponent - places;
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  mpq_class q = shift >= 0 ? mpq_class(num * p) : mpq_class(num, p);
  q.canonicalize();
  return q;
}

std::string rational_to_string(const mpq_class& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

}  // namespace mdl
