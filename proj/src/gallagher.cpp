#include "mdl/gallagher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mdl/arith.hpp"
#include "mdl/errors.hpp"
#include "mdl/parallel.hpp"

namespace mdl::gal {

namespace {

constexpr mpfr_prec_t kPrec = 128;

mpq_class qz(std::uint64_t q) { return mpq_class(mpz_class(static_cast<unsigned long>(q))); }

Interval qi(std::uint64_t q, mpfr_prec_t prec) { return Interval(static_cast<long>(q), prec); }

const mpq_class kHalf(1, 2);

mpq_class clamp_half(const mpq_class& x) {
  if (x < 0) return 0;
  return x > kHalf ? kHalf : x;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

RealExpr fibre_form(const Fibre& f, std::uint64_t q) {
  return mpz_class(static_cast<unsigned long>(q)) * f.beta.expr() - f.gamma_prime.expr();
}

Interval omega_interval(const OmegaSpec& w, std::uint64_t q, mpfr_prec_t prec) { return w.at(q, prec); }

Approx omega_approx(const OmegaSpec& w, std::uint64_t q) {
  if (w.kind == OmegaSpec::Kind::constant) return Approx::from(w.value);
  return Approx::from(cfrac::omega_schedule(q, w.value, w.schedule));
}

/// Compares ||form|| with 2^l q^-omega.
Ordering compare_cell_edge(const RealExpr& form, std::int64_t l, const OmegaSpec& w, std::uint64_t q) {
  if (form.is_rational() && w.kind == OmegaSpec::Kind::constant) {
    // d^b q^a against 2^(l b), omega = a / b
    const FracDist fd = frac_and_dist(form, 64);
    const mpq_class d = fd.dist.lo;
    const mpz_class a = w.value.get_num(), b = w.value.get_den();
    const unsigned long bu = b.get_ui();
    mpq_class lhs;
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), d.get_num_mpz_t(), bu);
    mpz_pow_ui(den.get_mpz_t(), d.get_den_mpz_t(), bu);
    lhs = mpq_class(num, den);
    lhs.canonicalize();
    mpz_class qa;
    mpz_pow_ui(qa.get_mpz_t(), mpz_class(static_cast<unsigned long>(q)).get_mpz_t(), a.get_ui());
    lhs *= mpq_class(qa);
    mpq_class rhs;
    if (l >= 0) {
      rhs = mpq_class(mpz_class(1) << static_cast<mp_bitcnt_t>(l * static_cast<std::int64_t>(bu)));
    } else {
      rhs = mpq_class(mpz_class(1), mpz_class(1) << static_cast<mp_bitcnt_t>(-l * static_cast<std::int64_t>(bu)));
      rhs.canonicalize();
    }
    return lhs < rhs ? Ordering::less : lhs > rhs ? Ordering::greater : Ordering::equal;
  }
  return decide_sign([&](mpfr_prec_t prec) {
    const Interval t = exp2(Interval(static_cast<long>(l), prec) - omega_interval(w, q, prec) * log2(qi(q, prec)));
    return dist_interval(form, prec) - t;
  });
}

/// l >= 0 with 2^l q^-w <= d < 2^(l+1) q^-w, -1 below the support, nullopt when undecided.
std::optional<std::int64_t> cell_of(const RealExpr& form, const OmegaSpec& w, std::uint64_t q, std::optional<Approx> d) {
  std::int64_t guess = 0;
  if (d && d->lo() > 0) {
    const Approx v = log2(*d) + omega_approx(w, q) * log2(Approx::exact(static_cast<long double>(q)));
    const long double flo = std::floor(v.lo()), fhi = std::floor(v.hi());
    if (v.hi() < 0) return -1;
    if (flo == fhi && v.lo() >= 0) return static_cast<std::int64_t>(flo);
    guess = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(v.v)));
  }
  const Ordering base = compare_cell_edge(form, 0, w, q);
  if (base == Ordering::undecided) return std::nullopt;
  if (base == Ordering::less) return -1;
  std::int64_t l = guess;
  for (;;) {
    const Ordering lo = compare_cell_edge(form, l, w, q);
    if (lo == Ordering::undecided) return std::nullopt;
    if (lo == Ordering::less) {
      --l;
      continue;
    }
    const Ordering hi = compare_cell_edge(form, l + 1, w, q);
    if (hi == Ordering::undecided) return std::nullopt;
    if (hi != Ordering::less) {
      ++l;
      continue;
    }
    return l;
  }
}

}  // namespace

// ----------------------------------------------------------- ApproxFunction

const char* to_string(Family f) {
  switch (f) {
    case Family::constant: return "const";
    case Family::inv: return "inv";
    case Family::invlog2: return "invlog2";
    case Family::gallagher: return "gallagher";
    case Family::mono2: return "mono2";
    case Family::table: return "table";
  }
  return "?";
}

ApproxFunction ApproxFunction::make(Family f, const mpq_class& c) {
  if (f == Family::table) throw DomainError("use from_table for tabulated psi");
  if (!(c > 0)) throw DomainError("psi constant must be positive");
  ApproxFunction p;
  p.family_ = f;
  p.c_ = c;
  switch (f) {
    case Family::constant:
      if (c >= kHalf) throw DomainError("constant psi must be < 1/2");
      p.q0_ = 1;
      return p;
    case Family::inv: {
      // c / q < 1/2  <=>  q > 2c
      mpz_class two_c;
      const mpq_class t = 2 * c;
      mpz_fdiv_q(two_c.get_mpz_t(), t.get_num_mpz_t(), t.get_den_mpz_t());
      p.q0_ = mpz_class(two_c + 1).get_ui();
      return p;
    }
    default: break;
  }
  std::uint64_t q = f == Family::invlog2 ? 2 : 3;
  for (;; ++q) {
    if (q > 100'000'000) throw DomainError("psi stays >= 1/2 for every q up to 1e8");
    p.q0_ = q;
    const Ordering o = decide_sign([&](mpfr_prec_t prec) { return Interval(kHalf, prec) - p.interval(q, prec); });
    if (o == Ordering::greater) break;
  }
  return p;
}

ApproxFunction ApproxFunction::from_table(std::uint64_t q0, std::vector<mpq_class> values) {
  if (q0 == 0) throw DomainError("table psi needs q0 >= 1");
  if (values.empty()) throw DomainError("table psi needs at least one value");
  for (const auto& v : values) {
    if (!(v > 0 && v < kHalf)) throw DomainError("table psi values must lie in (0, 1/2)");
  }
  ApproxFunction p;
  p.family_ = Family::table;
  p.c_ = 1;
  p.q0_ = q0;
  p.table_ = std::move(values);
  return p;
}

ApproxFunction ApproxFunction::parse(std::string_view text) {
  const std::string s = trim(text);
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw DomainError("psi must be written family:value, got '" + s + "'");
  std::string head = s.substr(0, colon);
  const std::string body = s.substr(colon + 1);
  if (head.rfind("table", 0) == 0) {
    std::uint64_t q0 = 1;
    if (head.size() > 5) {
      if (head[5] != '@') throw DomainError("bad table psi header '" + head + "'");
      q0 = std::stoull(head.substr(6));
    }
    std::vector<mpq_class> values;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      const auto comma = body.find(',', pos);
      const std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      values.push_back(parse_rational(trim(item)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return from_table(q0, std::move(values));
  }
  const mpq_class c = parse_rational(body);
  if (head == "const") return make(Family::constant, c);
  if (head == "inv") return make(Family::inv, c);
  if (head == "invlog2") return make(Family::invlog2, c);
  if (head == "gallagher") return make(Family::gallagher, c);
  if (head == "mono2") return make(Family::mono2, c);
  throw DomainError("unknown psi family '" + head + "'");
}

bool ApproxFunction::monotone() const {
  if (family_ != Family::table) return true;
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (table_[i] > table_[i - 1]) return false;
  }
  return true;
}

std::uint64_t ApproxFunction::q_max() const {
  return family_ == Family::table ? q0_ + table_.size() - 1 : UINT64_MAX;
}

void ApproxFunction::check_domain(std::uint64_t q) const {
  if (q < q0_ || q > q_max())
    throw DomainError("psi " + to_string() + " is not defined below 1/2 at q = " + std::to_string(q));
}

mpq_class ApproxFunction::exact(std::uint64_t q) const {
  check_domain(q);
  switch (family_) {
    case Family::constant: return c_;
    case Family::inv: return c_ / qz(q);
    case Family::table: return table_[q - q0_];
    default: throw DomainError("psi family " + std::string(gal::to_string(family_)) + " has no exact values");
  }
}

Interval ApproxFunction::interval(std::uint64_t q, mpfr_prec_t prec) const {
  if (is_rational()) return Interval(exact(q), prec);
  if (q < 2 || (family_ != Family::invlog2 && q < 3)) throw DomainError("psi formula undefined at q = " + std::to_string(q));
  const Interval Qi = qi(q, prec);
  const Interval L = log2(Qi);
  Interval den = Qi * L;
  switch (family_) {
    case Family::invlog2: den *= L; break;
    case Family::gallagher: {
      const Interval LL = log2(L);
      den *= LL * LL;
      break;
    }
    case Family::mono2: den *= L * sqrt(log2(L)); break;
    default: break;
  }
  return Interval(c_, prec) / den;
}

Approx ApproxFunction::approx(std::uint64_t q) const {
  if (is_rational()) return Approx::from(exact(q));
  check_domain(q);
  const Approx Qa = Approx::exact(static_cast<long double>(q));
  const Approx L = log2(Qa);
  Approx den = Qa * L;
  switch (family_) {
    case Family::invlog2: den = den * L; break;
    case Family::gallagher: {
      const Approx LL = log2(L);
      den = den * LL * LL;
      break;
    }
    case Family::mono2: den = den * L * sqrt(log2(L)); break;
    default: break;
  }
  return Approx::from(c_) / den;
}

std::string ApproxFunction::to_string() const {
  if (family_ == Family::table) {
    std::string s = "table@" + std::to_string(q0_) + ":";
    for (std::size_t i = 0; i < table_.size(); ++i) s += (i ? "," : "") + rational_to_string(table_[i]);
    return s;
  }
  return std::string(gal::to_string(family_)) + ":" + rational_to_string(c_);
}

Enclosure psi_eval(const ApproxFunction& psi, std::uint64_t q) {
  if (psi.is_rational()) return Enclosure::exact(psi.exact(q));
  if (q < psi.q0()) throw DomainError("psi " + psi.to_string() + " is not defined below 1/2 at q = " + std::to_string(q));
  return Enclosure::from_interval(psi.interval(q, kPrec));
}

// --------------------------------------------------------------- OmegaSpec

OmegaSpec OmegaSpec::parse(std::string_view text) {
  const std::string s = trim(text);
  OmegaSpec w;
  if (s.rfind("sched2:", 0) == 0) {
    w = of_schedule(parse_rational(s.substr(7)), cfrac::OmegaKind::double_log);
  } else if (s.rfind("sched:", 0) == 0) {
    w = of_schedule(parse_rational(s.substr(6)));
  } else {
    w = constant(parse_rational(s));
  }
  if (!(w.value > 0)) throw DomainError("omega must be positive");
  return w;
}

Interval OmegaSpec::at(std::uint64_t q, mpfr_prec_t prec) const {
  if (kind == Kind::constant) return Interval(value, prec);
  return cfrac::omega_schedule_interval(q, value, schedule, prec);
}

std::string OmegaSpec::to_string() const {
  if (kind == Kind::constant) return rational_to_string(value);
  return std::string(schedule == cfrac::OmegaKind::double_log ? "sched2:" : "sched:") + rational_to_string(value);
}

std::string PsiPrime::to_string() const {
  std::string s = psi.to_string();
  if (fibre) {
    s += " beta=" + fibre->beta.to_string() + " gamma'=" + fibre->gamma_prime.to_string();
    if (fibre->omega) s += " omega=" + fibre->omega->to_string();
  }
  return s;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::support: return "support";
    case Status::outside: return "outside";
    case Status::undecided: return "undecided";
    case Status::degenerate: return "degenerate";
  }
  return "?";
}

// ------------------------------------------------------------------ psi'

PsiPrimeValue psi_prime(const PsiPrime& pp, std::uint64_t q) {
  const Enclosure psi = psi_eval(pp.psi, q);
  if (!pp.fibre) return {psi, Status::support};
  const Fibre& f = *pp.fibre;
  const RealExpr form = fibre_form(f, q);
  const Ordering nonzero = compare_dist(form, 0);
  if (nonzero == Ordering::equal) return {Enclosure::exact(0), Status::degenerate};
  if (nonzero == Ordering::undecided) return {Enclosure::exact(0), Status::undecided};
  if (f.omega) {
    const Ordering o = compare_cell_edge(form, 0, *f.omega, q);
    if (o == Ordering::undecided) return {Enclosure::exact(0), Status::undecided};
    if (o == Ordering::less) return {Enclosure::exact(0), Status::outside};
  }
  if (form.is_rational() && pp.psi.is_rational()) {
    return {Enclosure::exact(psi.lo / frac_and_dist(form, 64).dist.lo), Status::support};
  }
  const Interval v = pp.psi.interval(q, kPrec) / dist_interval(form, kPrec);
  return {Enclosure::from_interval(v), Status::support};
}

std::uint64_t PsiPrimeTable::undecided() const {
  return static_cast<std::uint64_t>(std::count(status.begin(), status.end(), Status::undecided));
}

std::uint64_t PsiPrimeTable::degenerate() const {
  return static_cast<std::uint64_t>(std::count(status.begin(), status.end(), Status::degenerate));
}

Enclosure PsiPrimeTable::enclosure(std::uint64_t q) const {
  const std::size_t i = q - q0;
  if (status[i] != Status::support) return Enclosure::exact(0);
  if (!exact.empty()) return Enclosure::exact(exact[i]);
  return value[i].enclosure();
}

PsiPrimeTable psi_prime_table(const PsiPrime& pp, std::uint64_t Q, unsigned threads) {
  PsiPrimeTable t;
  t.q0 = pp.psi.q0();
  t.Q = Q;
  if (Q < t.q0) return t;
  if (Q > pp.psi.q_max()) throw DomainError("psi table ends at q = " + std::to_string(pp.psi.q_max()));
  const std::size_t n = Q - t.q0 + 1;
  t.value.resize(n);
  t.status.assign(n, Status::support);
  t.psi.resize(n);
  t.dist_beta.assign(n, Approx::exact(1));
  if (!pp.fibre && pp.psi.is_rational()) t.exact.resize(n);

  std::optional<FixedAngle> B, G;
  if (pp.fibre) {
    B = FixedAngle::of(pp.fibre->beta.expr());
    G = FixedAngle::of(pp.fibre->gamma_prime.expr());
  }
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t q = t.q0 + i;
    t.psi[i] = pp.psi.approx(q);
    if (!t.exact.empty()) t.exact[i] = pp.psi.exact(q);
    if (!pp.fibre) {
      t.value[i] = t.psi[i];
      return;
    }
    const Approx d = (B->times(static_cast<std::int64_t>(q)) - *G).dist();
    bool fast = d.lo() > 0;
    if (fast && pp.fibre->omega) {
      const Approx th = exp2(Approx::exact(0) - omega_approx(*pp.fibre->omega, q) *
                                                    log2(Approx::exact(static_cast<long double>(q))));
      const auto below = certainly_less(d, th);
      if (!below) {
        fast = false;
      } else if (*below) {
        t.status[i] = Status::outside;
        t.value[i] = Approx::exact(0);
        t.dist_beta[i] = d;
        return;
      }
    }
    if (fast) {
      t.dist_beta[i] = d;
      t.value[i] = t.psi[i] / d;
      return;
    }
    const PsiPrimeValue v = psi_prime(pp, q);
    t.status[i] = v.status;
    t.value[i] = v.status == Status::support ? Approx::from(v.value) : Approx::exact(0);
    t.dist_beta[i] = Approx::from(Enclosure::from_interval(dist_interval(fibre_form(*pp.fibre, q), kPrec)));
  });
  return t;
}

SumResult divergence_sum(const PsiPrime& pp, std::uint64_t Q) {
  const PsiPrimeTable t = psi_prime_table(pp, Q);
  SumResult r{Enclosure::exact(0), t.undecided(), t.degenerate()};
  for (std::uint64_t q = t.q0; q <= Q; ++q) {
    if (t.status[q - t.q0] == Status::support) r.value = r.value + psi_prime(pp, q).value;
  }
  return r;
}

// ---------------------------------------------------------------- census

std::optional<std::int64_t> gl_cell(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega,
                                    std::uint64_t q) {
  if (q == 0) throw DomainError("gl_cell needs q >= 1");
  const Fibre f{beta, gamma_prime, omega};
  const RealExpr form = fibre_form(f, q);
  return cell_of(form, omega, q, std::nullopt);
}

Census gl_census(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega, std::uint64_t Q) {
  const FixedAngle B = FixedAngle::of(beta.expr()), G = FixedAngle::of(gamma_prime.expr());
  const Fibre f{beta, gamma_prime, omega};
  Census c;
  for (std::uint64_t q = 1; q <= Q; ++q) {
    const Approx d = (B.times(static_cast<std::int64_t>(q)) - G).dist();
    const RealExpr form = fibre_form(f, q);
    if (!(d.lo() > 0)) {
      const Ordering z = compare_dist(form, 0);
      if (z == Ordering::equal) {
        c.degenerate.push_back(q);
        continue;
      }
      if (z == Ordering::undecided) {
        c.undecided.push_back(q);
        continue;
      }
    }
    const auto l = cell_of(form, omega, q, d.lo() > 0 ? std::optional<Approx>(d) : std::nullopt);
    if (!l) {
      c.undecided.push_back(q);
    } else if (*l >= 0) {
      c.cells[*l].push_back(q);
    }
  }
  return c;
}

// ------------------------------------------------------------------ S_klr

SklrResult sklr_sum(const PsiPrime& pp, const RealParam& gamma, std::uint64_t q, std::uint64_t k, std::int64_t l,
                    std::uint64_t r) {
  if (!pp.fibre || !pp.fibre->omega) throw DomainError("sklr_sum needs psi' with beta, gamma' and omega");
  if (r == 0 || q % r != 0) throw NotADivisor(std::to_string(r) + " does not divide " + std::to_string(q));
  if (k >= 63) throw DomainError("sklr_sum needs k < 63");
  const Fibre& f = *pp.fibre;
  SklrResult out;
  // q' in [q / 2^(k+1), q / 2^k], q' < q, r | q'
  const mpz_class Z(static_cast<unsigned long>(q));
  mpz_class lo_z, hi_z;
  mpz_cdiv_q_2exp(lo_z.get_mpz_t(), Z.get_mpz_t(), k + 1);
  mpz_fdiv_q_2exp(hi_z.get_mpz_t(), Z.get_mpz_t(), k);
  std::uint64_t lo = std::max<std::uint64_t>(1, lo_z.get_ui());
  std::uint64_t hi = std::min<std::uint64_t>(q - 1, hi_z.get_ui());
  const PsiPrimeValue at_q = q >= pp.psi.q0() ? psi_prime(pp, q) : PsiPrimeValue{Enclosure::exact(0), Status::outside};
  if (at_q.status == Status::undecided) ++out.undecided;
  for (std::uint64_t qp = (lo + r - 1) / r * r; qp <= hi; qp += r) {
    if (std::gcd(qp, q) != r) continue;
    const auto cell = cell_of(fibre_form(f, qp), *f.omega, qp, std::nullopt);
    if (!cell) {
      ++out.undecided;
      continue;
    }
    if (*cell != l) continue;
    const PsiPrimeValue at_qp =
        qp >= pp.psi.q0() ? psi_prime(pp, qp) : PsiPrimeValue{Enclosure::exact(0), Status::outside};
    if (at_qp.status == Status::undecided) {
      ++out.undecided;
      continue;
    }
    // Delta(q', q) / r = (q psi'(q') + q' psi'(q)) / r
    const mpz_class kk = (mpz_class(static_cast<unsigned long>(qp)) - Z) / static_cast<unsigned long>(r);
    const RealExpr form = kk * gamma.expr();
    Ordering o;
    if (at_q.value.is_exact() && at_qp.value.is_exact()) {
      const mpq_class radius = (qz(q) * at_qp.value.lo + qz(qp) * at_q.value.lo) / qz(r);
      o = compare_dist(form, radius);
    } else {
      o = decide_sign([&](mpfr_prec_t prec) {
        const PsiPrimeValue a = psi_prime(pp, q), b = psi_prime(pp, qp);
        Interval radius = b.value.interval(prec);
        radius.mul_si(static_cast<long>(q));
        Interval other = a.value.interval(prec);
        other.mul_si(static_cast<long>(qp));
        radius += other;
        radius.div_ui(static_cast<unsigned long>(r));
        return dist_interval(form, prec) - radius;
      });
    }
    if (o == Ordering::undecided) {
      ++out.undecided;
    } else if (o != Ordering::greater) {
      ++out.count;
      out.members.push_back(qp);
    }
  }
  return out;
}

// -------------------------------------------------------------- F moments

FMoment f_moment_sum(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega, std::uint64_t Q,
                     std::int64_t l, unsigned K) {
  if (Q < 2) throw DomainError("f_moment_sum needs Q >= 2");
  if (l < 0) throw DomainError("f_moment_sum needs l >= 0");
  const Census census = gl_census(beta, gamma_prime, omega, Q);
  FMoment m;
  Interval sum(0L, kPrec);
  const std::uint64_t lo = (Q + 1) / 2;
  if (auto it = census.cells.find(l); it != census.cells.end()) {
    for (std::uint64_t q : it->second) {
      if (q < lo) continue;
      const Interval F = arith::F_interval(q, kPrec);
      Interval p(1L, kPrec);
      for (unsigned i = 0; i < K; ++i) p *= F;
      sum += p;
      ++m.members;
    }
  }
  for (std::uint64_t q : census.undecided) m.undecided += q >= lo;
  m.sum = Enclosure::from_interval(sum);
  const Interval e = (Interval(1L, kPrec) - omega.at(Q, kPrec)) * log2(qi(Q, kPrec)) + Interval(l + 1, kPrec);
  m.reference = Enclosure::from_interval(exp2(e));
  return m;
}

// ------------------------------------------------------------- BC ratio

namespace {

circle::Measured aq_measure(const Enclosure& psi) {
  if (psi.lo >= kHalf) return {1, 0};
  return {2 * clamp_half(psi.mid()), 2 * psi.radius()};
}

Enclosure bc_enclosure(const circle::Measured& M, const circle::Measured& P) {
  const mpq_class ml = std::max(mpq_class(0), mpq_class(M.value - M.err)), mh = M.value + M.err;
  const mpq_class pl = std::max(mpq_class(0), mpq_class(P.value - P.err)), ph = P.value + P.err;
  const mpq_class dl = ml + 2 * ph, dh = mh + 2 * pl;
  return {dl > 0 ? mpq_class(ml * ml / dl) : mpq_class(0), dh > 0 ? mpq_class(mh * mh / dh) : mpq_class(1)};
}

}  // namespace

BCSeries bc_ratio(const PsiPrime& pp, const RealParam& gamma, std::uint64_t Q, unsigned threads) {
  const std::uint64_t q0 = pp.psi.q0();
  if (Q < q0) throw DomainError("bc_ratio needs Q >= q0 = " + std::to_string(q0));
  const PsiPrimeTable t = psi_prime_table(pp, Q, threads);
  const circle::Shift shift = circle::Shift::of(gamma, 64);
  const std::size_t n = Q - q0 + 1;
  std::vector<Enclosure> psi(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = t.enclosure(q0 + i);
  std::vector<circle::Measured> rows(n, circle::Measured{0, 0});
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t q = q0 + i;
    if (t.status[i] != Status::support) return;
    circle::Measured acc{0, 0};
    for (std::size_t j = 0; j < i; ++j) {
      if (t.status[j] != Status::support) continue;
      const circle::Measured m = circle::pair_measure(psi[i], psi[j], shift, q, q0 + j);
      acc.value += m.value;
      acc.err += m.err;
    }
    rows[i] = std::move(acc);
  });
  BCSeries s;
  s.undecided = t.undecided();
  circle::Measured M{0, 0}, P{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (t.status[i] == Status::support) {
      const circle::Measured a = aq_measure(psi[i]);
      M.value += a.value;
      M.err += a.err;
      P.value += rows[i].value;
      P.err += rows[i].err;
    }
    if (M.value == 0 && M.err == 0) continue;  // ratio undefined while every A_q is empty
    BCEntry e;
    e.Q = q0 + i;
    e.measure_sum = M;
    e.pair_sum = P;
    const mpq_class den = M.value + 2 * P.value;
    e.ratio = den > 0 ? mpq_class(M.value * M.value / den) : mpq_class(0);
    e.ratio_enclosure = bc_enclosure(M, P);
    s.entries.push_back(std::move(e));
  }
  if (s.entries.empty()) throw DomainError("bc_ratio: every psi' value up to Q vanishes");
  return s;
}

// --------------------------------------------------------------- unions

UnionSeries union_series(const PsiPrime& pp, const RealParam& gamma, std::uint64_t Q0, std::uint64_t Q) {
  Q0 = std::max(Q0, pp.psi.q0());
  if (Q < Q0) throw DomainError("union_series needs Q >= max(Q0, q0)");
  const PsiPrimeTable t = psi_prime_table(pp, Q);
  const circle::Shift shift = circle::Shift::of(gamma, 64);
  UnionSeries u;
  u.Q0 = Q0;
  u.undecided = 0;
  circle::CircleSet acc;
  for (std::uint64_t q = Q0; q <= Q; ++q) {
    const std::size_t i = q - t.q0;
    if (t.status[i] == Status::undecided) ++u.undecided;
    if (t.status[i] == Status::support) {
      const Enclosure psi = t.enclosure(q);
      circle::CircleSet a;
      if (psi.lo >= kHalf) {
        a = circle::CircleSet::full();
      } else {
        const mpq_class mid = clamp_half(psi.mid());
        const mpq_class qq = qz(q), r = mid / qq;
        std::vector<circle::Arc> pieces;
        pieces.reserve(q);
        for (std::uint64_t j = 0; j < q; ++j) {
          const mpq_class c = (shift.c + qz(j)) / qq;
          pieces.push_back({c - r, c + r});
        }
        a = circle::CircleSet::from_pieces(std::move(pieces), 2 * shift.delta + 2 * psi.radius());
      }
      acc = circle::unite(acc, a);
    }
    u.measures.push_back({acc.measure(), acc.slack()});
  }
  return u;
}

// ------------------------------------------------------------------ hits

namespace {

/// ||q x - gamma|| * ||q beta - gamma'|| < psi(q), rigorously.
Ordering product_test(const RealExpr& x, const RealExpr& gamma, const PsiPrime& pp, std::uint64_t q) {
  const mpz_class Z(static_cast<unsigned long>(q));
  const RealExpr fx = Z * x - gamma;
  const std::optional<RealExpr> fb =
      pp.fibre ? std::optional<RealExpr>(fibre_form(*pp.fibre, q)) : std::nullopt;
  if (fx.is_rational() && (!fb || fb->is_rational()) && pp.psi.is_rational()) {
    mpq_class prod = frac_and_dist(fx, 64).dist.lo;
    if (fb) prod *= frac_and_dist(*fb, 64).dist.lo;
    const mpq_class p = pp.psi.exact(q);
    return prod < p ? Ordering::less : prod > p ? Ordering::greater : Ordering::equal;
  }
  return decide_sign([&](mpfr_prec_t prec) {
    Interval prod = dist_interval(fx, prec);
    if (fb) prod *= dist_interval(*fb, prec);
    return prod - pp.psi.interval(q, prec);
  });
}

struct HitKernel {
  const PsiPrime& pp;
  const PsiPrimeTable& t;
  FixedAngle G;
  RealExpr gamma;

  /// 1 hit, 0 miss, -1 undecided, -2 degenerate
  int test(const FixedAngle& xa, const RealExpr* x_expr, const mpq_class* x_rat, std::uint64_t q) const {
    const std::size_t i = q - t.q0;
    const Status st = t.status[i];
    if (st == Status::degenerate) return -2;
    if (st == Status::undecided) return -1;
    if (st == Status::outside) return 0;
    const Approx d = (xa.times(static_cast<std::int64_t>(q)) - G).dist();
    const auto less = certainly_less(d * t.dist_beta[i], t.psi[i]);
    if (less) return *less ? 1 : 0;
    const RealExpr xe = x_expr ? *x_expr : RealExpr(*x_rat);
    const Ordering o = product_test(xe, gamma, pp, q);
    if (o == Ordering::undecided) return -1;
    return o == Ordering::less ? 1 : 0;
  }
};

}  // namespace

HitCount hit_count(const RealParam& x, const RealParam& gamma, const PsiPrime& pp, std::uint64_t Q) {
  HitCount h;
  const PsiPrimeTable t = psi_prime_table(pp, Q);
  if (Q < t.q0) return h;
  const HitKernel kernel{pp, t, FixedAngle::of(gamma.expr()), gamma.expr()};
  const RealExpr xe = x.expr();
  const FixedAngle xa = FixedAngle::of(xe);
  for (std::uint64_t q = t.q0; q <= Q; ++q) {
    const int r = kernel.test(xa, &xe, nullptr, q);
    if (r == 1) ++h.count;
    else if (r == -1) ++h.undecided;
    else if (r == -2) ++h.degenerate;
  }
  return h;
}

std::uint64_t sample_u64(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 gen(seq);
  return gen();
}

MCResult mc_survey(const RealParam& gamma, const PsiPrime& pp, std::uint64_t Q, std::uint64_t samples,
                   std::uint64_t seed, unsigned threads) {
  if (samples == 0) throw DomainError("mc_survey needs at least one sample");
  const PsiPrimeTable t = psi_prime_table(pp, Q, threads);
  MCResult r;
  r.samples = samples;
  r.counts.assign(samples, 0);
  std::vector<std::uint64_t> undecided(samples, 0);
  if (Q >= t.q0) {
    const HitKernel kernel{pp, t, FixedAngle::of(gamma.expr()), gamma.expr()};
    parallel_for(samples, threads, [&](std::size_t s) {
      const std::uint64_t X = sample_u64(seed, s);
      const FixedAngle xa = FixedAngle::from_u64_fraction(X);
      mpq_class xr(mpz_class(static_cast<unsigned long>(X)), mpz_class(1) << 64);
      xr.canonicalize();
      for (std::uint64_t q = t.q0; q <= Q; ++q) {
        const int v = kernel.test(xa, nullptr, &xr, q);
        if (v == 1) ++r.counts[s];
        else if (v == -1) ++undecided[s];
      }
    });
  }
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    total += r.counts[s];
    r.undecided += undecided[s];
  }
  r.undecided += t.undecided();
  r.mean = mpq_class(mpz_class(static_cast<unsigned long>(total)), mpz_class(static_cast<unsigned long>(samples)));
  r.mean.canonicalize();
  Enclosure expected = Enclosure::exact(0);
  if (Q >= t.q0) {
    for (std::uint64_t q = t.q0; q <= Q; ++q) {
      const Enclosure v = t.enclosure(q);
      expected = expected + Enclosure{std::min(mpq_class(1), mpq_class(2 * v.lo)), std::min(mpq_class(1), mpq_class(2 * v.hi))};
    }
  }
  r.expected = expected;
  r.deviation = Enclosure::exact(r.mean) - expected;
  return r;
}

// ------------------------------------------------------- doubly metric

namespace {

Ordering below_threshold(const RealExpr& form, std::uint64_t h, const mpq_class& H) {
  // ||form|| <= h^-H ?  less/equal = fails
  if (form.is_rational() && H.get_den() == 1 && H >= 0) {
    const mpq_class d = frac_and_dist(form, 64).dist.lo;
    mpz_class hp;
    mpz_pow_ui(hp.get_mpz_t(), mpz_class(static_cast<unsigned long>(h)).get_mpz_t(), H.get_num().get_ui());
    const mpq_class lhs = d * mpq_class(hp);
    return lhs < 1 ? Ordering::less : lhs > 1 ? Ordering::greater : Ordering::equal;
  }
  return decide_sign([&](mpfr_prec_t prec) {
    return dist_interval(form, prec) - exp2(-(Interval(H, prec) * log2(qi(h, prec))));
  });
}

}  // namespace

DMSample doubly_metric_check(const RealParam& gamma, const RealParam& beta, const mpq_class& H_prime,
                             std::uint64_t N) {
  if (N < 2) throw DomainError("doubly_metric_check needs N >= 2");
  if (!(H_prime > 2)) throw DomainError("doubly_metric_check needs H' > 2");
  DMSample out;
  const RealExpr g = gamma.expr(), b = beta.expr();
  for (int s : {1, -1}) {
    const RealExpr form = g + s * b;
    if (form.is_rational() && frac_and_dist(form, 64).dist.lo == 0) {
      out.failed = out.dependent = true;
      out.k1 = 1;
      out.k2 = s;
      return out;
    }
  }
  const FixedAngle G = FixedAngle::of(g), B = FixedAngle::of(b);
  const Approx Ha = Approx::from(H_prime);
  long double worst = -INFINITY;
  bool any_fail = false;
  auto visit = [&](std::int64_t k1, std::int64_t k2, std::uint64_t h, const Approx& th) {
    const Approx d = (G.times(k1) + B.times(k2)).dist();
    const long double lh = std::log2(static_cast<long double>(h));
    const long double e = d.v > 0 ? -std::log2(d.v) / lh : INFINITY;
    bool fails = false;
    bool exact_dep = false;
    const auto lt = certainly_less(d, th);
    if (lt && d.lo() > 0) {
      fails = *lt;
    } else {
      const RealExpr form = k1 * g + k2 * b;
      if (form.is_rational() && frac_and_dist(form, 64).dist.lo == 0) {
        fails = exact_dep = true;
      } else {
        const Ordering o = below_threshold(form, h, H_prime);
        if (o == Ordering::undecided) out.undecided = true;
        fails = o == Ordering::less || o == Ordering::equal;
      }
    }
    if (exact_dep && !out.dependent) {
      out.dependent = true;
      out.k1 = k1;
      out.k2 = k2;
      worst = INFINITY;
    }
    if (fails) any_fail = true;
    if (!out.dependent && e > worst) {
      worst = e;
      out.k1 = k1;
      out.k2 = k2;
    }
  };
  for (std::uint64_t h = 2; h <= N; ++h) {
    const auto H = static_cast<std::int64_t>(h);
    const Approx th = exp2(Approx::exact(0) - Ha * log2(Approx::exact(static_cast<long double>(h))));
    for (std::int64_t k1 = 1; k1 < H; ++k1) {
      visit(k1, -H, h, th);
      visit(k1, H, h, th);
    }
    for (std::int64_t k2 = -H; k2 <= H; ++k2) {
      if (k2 != 0) visit(H, k2, h, th);
    }
  }
  out.failed = any_fail;
  if (!out.dependent) {
    const std::uint64_t h = static_cast<std::uint64_t>(std::max(std::llabs(out.k1), std::llabs(out.k2)));
    out.exponent = Enclosure::from_interval(cfrac::exponent_interval(out.k1 * g + out.k2 * b, h, kPrec));
  }
  return out;
}

DMResult doubly_metric_sample(const RealParam& gamma, const mpq_class& H_prime, std::uint64_t N,
                              std::uint64_t samples, std::uint64_t seed, unsigned threads) {
  if (samples == 0) throw DomainError("doubly_metric_sample needs at least one sample");
  if (!(H_prime > 2)) throw DomainError("doubly_metric_sample needs H' > 2");
  DMResult r;
  r.samples = samples;
  r.per_sample.resize(samples);
  parallel_for(samples, threads, [&](std::size_t s) {
    mpq_class b(mpz_class(static_cast<unsigned long>(sample_u64(seed, s))), mpz_class(1) << 64);
    b.canonicalize();
    r.per_sample[s] = doubly_metric_check(gamma, RealParam::rational(b), H_prime, N);
  });
  for (const DMSample& d : r.per_sample) r.failures += d.failed;
  r.fraction = mpq_class(mpz_class(static_cast<unsigned long>(r.failures)), mpz_class(static_cast<unsigned long>(samples)));
  r.fraction.canonicalize();
  // sum_{k=2}^N 4 k^(1 - H')
  const mpq_class e = 1 - H_prime;
  if (e.get_den() == 1) {
    mpq_class sum = 0;
    const long ex = e.get_num().get_si();
    for (std::uint64_t k = 2; k <= N; ++k) {
      mpz_class p;
      mpz_pow_ui(p.get_mpz_t(), mpz_class(static_cast<unsigned long>(k)).get_mpz_t(), static_cast<unsigned long>(std::labs(ex)));
      sum += ex >= 0 ? mpq_class(4 * p) : mpq_class(4, p);
    }
    sum.canonicalize();
    r.union_bound = sum;
    r.union_bound_enclosure = Enclosure::exact(sum);
  } else {
    Interval sum(0L, kPrec);
    for (std::uint64_t k = 2; k <= N; ++k) sum += exp2(Interval(e, kPrec) * log2(qi(k, kPrec))) * Interval(4L, kPrec);
    r.union_bound_enclosure = Enclosure::from_interval(sum);
    r.union_bound = r.union_bound_enclosure.mid();
  }
  return r;
}

}  // namespace mdl::gal
