#include "mdl/cfrac.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mdl/errors.hpp"
#include "mdl/fast.hpp"

namespace mdl::cfrac {

namespace {

mpz_class floor_q(const mpq_class& x) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return f;
}

void require_sigma_input(const RealParam& p, bool allow_literal, const char* what) {
  if (p.is_exact()) throw IrrationalRequired(std::string(what) + ": sigma is not well defined for rational " + p.to_string());
  if (p.is_literal() && !allow_literal)
    throw IrrationalRequired(std::string(what) + ": decimal literal " + p.to_string() +
                             " may be rational; pass the literal override to proceed");
}

// Certified exponent for one form, escalating until ||form|| is bounded away
// from zero.
Interval certified_exponent(const RealExpr& form, std::uint64_t height, mpfr_prec_t prec) {
  for (;; prec *= 2) {
    Interval d = dist_interval(form, prec);
    if (d.is_positive()) {
      Interval r = -log2(d);
      return r / log2(Interval(static_cast<long>(height), prec));
    }
    if (prec > precision_cap() + 64) throw CapExceeded("distance not separated from zero for " + form.to_string());
  }
}

struct Pair {
  std::int64_t k1;
  std::int64_t k2;
};

bool lex_less(const Pair& a, const Pair& b) { return a.k1 != b.k1 ? a.k1 < b.k1 : a.k2 < b.k2; }

// Canonical (first nonzero entry positive) pairs with max(|k1|,|k2|) = h in
// lexicographic order.
std::vector<Pair> shell(std::int64_t h, bool pair) {
  std::vector<Pair> out;
  if (!pair) {
    out.push_back({h, 0});
    return out;
  }
  out.reserve(static_cast<std::size_t>(4 * h));
  out.push_back({0, h});
  for (std::int64_t k1 = 1; k1 < h; ++k1) {
    out.push_back({k1, -h});
    out.push_back({k1, h});
  }
  for (std::int64_t k2 = -h; k2 <= h; ++k2) out.push_back({h, k2});
  return out;
}

struct Contender {
  Pair witness;
  std::uint64_t height;
  RealExpr form;
  Interval exponent;
};

// Picks the larger of two contenders, escalating precision; exact ties (at
// the cap) go to the lexicographically smaller witness and widen the
// enclosure to the hull.
Contender better(Contender a, Contender b) {
  mpfr_prec_t prec = std::max(a.exponent.precision(), b.exponent.precision());
  while (true) {
    if (b.exponent.certainly_below(a.exponent)) return a;
    if (a.exponent.certainly_below(b.exponent)) return b;
    if (prec > precision_cap() + 64) {
      Contender& w = lex_less(a.witness, b.witness) ? a : b;
      w.exponent = hull(a.exponent, b.exponent);
      return w;
    }
    prec *= 2;
    a.exponent = certified_exponent(a.form, a.height, prec);
    b.exponent = certified_exponent(b.form, b.height, prec);
  }
}

DiophantineProfile profile(const RealParam& gamma, const RealParam* beta, std::uint64_t N_max) {
  if (N_max < 2) throw DomainError("sigma needs N >= 2");
  const RealExpr g = gamma.expr();
  const RealExpr b = beta ? beta->expr() : RealExpr();
  const FixedAngle fg = FixedAngle::of(g);
  const FixedAngle fb = beta ? FixedAngle::of(b) : FixedAngle{};
  const bool is_pair = beta != nullptr;
  auto form_of = [&](const Pair& p) {
    RealExpr f = mpz_class(static_cast<long>(p.k1)) * g;
    if (is_pair && p.k2 != 0) f += mpz_class(static_cast<long>(p.k2)) * b;
    return f;
  };
  constexpr long double kSuspect = 0x1p-100L;

  if (is_pair) {
    for (const Pair& p : shell(1, true)) {
      if (compare_dist(form_of(p), 0) == Ordering::equal) throw DependenceDetected(p.k1, p.k2);
    }
  }

  DiophantineProfile out;
  out.entries.reserve(N_max - 1);
  std::optional<Contender> best;
  for (std::uint64_t h = 2; h <= N_max; ++h) {
    const auto pairs = shell(static_cast<std::int64_t>(h), is_pair);
    const Approx log_h = log2(Approx::exact(static_cast<long double>(h)));
    std::vector<Approx> est(pairs.size());
    long double max_lo = -std::numeric_limits<long double>::infinity();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Pair& p = pairs[i];
      FixedAngle a = fg.times(p.k1);
      if (is_pair && p.k2 != 0) a = a + fb.times(p.k2);
      const Approx d = a.dist();
      if (!(d.lo() > kSuspect)) {
        if (compare_dist(form_of(p), 0) == Ordering::equal) throw DependenceDetected(p.k1, p.k2);
        est[i] = {0, std::numeric_limits<long double>::infinity()};
        continue;
      }
      est[i] = Approx::exact(0) - log2(d) / log_h;
      max_lo = std::max(max_lo, est[i].lo());
    }
    std::optional<Contender> shell_best;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (est[i].hi() < max_lo) continue;
      RealExpr f = form_of(pairs[i]);
      Interval e = certified_exponent(f, h, 128);
      Contender c{pairs[i], h, std::move(f), std::move(e)};
      shell_best = shell_best ? better(std::move(*shell_best), std::move(c)) : std::move(c);
    }
    best = best ? better(std::move(*best), std::move(*shell_best)) : std::move(*shell_best);
    out.entries.push_back({h, Enclosure::from_interval(best->exponent), best->witness.k1, best->witness.k2});
  }
  return out;
}

}  // namespace

// ----------------------------------------------------------- QuotientStream

QuotientStream::QuotientStream(const RealParam& alpha)
    : alpha_(alpha.expr()), is_rational_(alpha.is_exact()) {
  if (is_rational_) rational_ = alpha.rational_value();
}

bool QuotientStream::next(mpz_class& quotient) {
  if (done_) return false;
  if (is_rational_) {
    quotient = floor_q(rational_);
    const mpq_class r = rational_ - mpq_class(quotient);
    if (r == 0) {
      done_ = true;
    } else {
      rational_ = 1 / r;
    }
    return true;
  }
  const RealExpr num = a_ * alpha_ + RealExpr(mpq_class(b_));
  const RealExpr den = c_ * alpha_ + RealExpr(mpq_class(d_));
  const long entry_bits = static_cast<long>(std::max({mpz_sizeinbase(a_.get_mpz_t(), 2), mpz_sizeinbase(b_.get_mpz_t(), 2),
                                                      mpz_sizeinbase(c_.get_mpz_t(), 2), mpz_sizeinbase(d_.get_mpz_t(), 2)}));
  for (long bits = kInitialBits;; bits *= 2) {
    const mpfr_prec_t prec = bits + 2 * entry_bits + 32;
    const Interval dn = den.interval(prec);
    if (!dn.contains_zero()) {
      const Interval x = num.interval(prec) / dn;
      const mpz_class fl = floor_q(x.lo_q());
      if (x.hi_q() < mpq_class(fl + 1)) {
        quotient = fl;
        break;
      }
    }
    if (bits >= precision_cap()) throw CapExceeded("partial quotient undecided at the precision cap");
  }
  // x <- 1 / (x - quotient)
  mpz_class na = c_, nb = d_, nc = a_ - quotient * c_, nd = b_ - quotient * d_;
  a_ = std::move(na);
  b_ = std::move(nb);
  c_ = std::move(nc);
  d_ = std::move(nd);
  return true;
}

CFExpansion expand(const RealParam& alpha, std::size_t terms) {
  CFExpansion out;
  QuotientStream stream(alpha);
  mpz_class p_prev = 1, p_prev2 = 0, q_prev = 0, q_prev2 = 1;
  mpz_class a;
  while (out.quotients.size() < terms + 1) {
    if (!stream.next(a)) {
      out.terminated = true;
      break;
    }
    mpz_class p = a * p_prev + p_prev2;
    mpz_class q = a * q_prev + q_prev2;
    p_prev2 = p_prev;
    p_prev = p;
    q_prev2 = q_prev;
    q_prev = q;
    out.quotients.push_back(a);
    out.convergents.push_back({p, q});
  }
  if (!out.terminated && alpha.is_exact()) {
    // Detect termination exactly at the last requested term.
    mpz_class next;
    if (!stream.next(next)) out.terminated = true;
  }
  return out;
}

MinDist min_dist(const RealParam& alpha, std::uint64_t N) {
  if (N == 0) throw DomainError("min_dist needs N >= 1");
  if (alpha.is_exact()) throw IrrationalRequired("min_dist needs an irrational parameter, got " + alpha.to_string());
  QuotientStream stream(alpha);
  mpz_class a;
  stream.next(a);  // a0 does not affect ||n alpha||
  mpz_class q_prev = 1, q_prev2 = 0;  // q_0 = 1
  const mpz_class limit(static_cast<unsigned long>(N));
  while (stream.next(a)) {
    mpz_class q = a * q_prev + q_prev2;
    if (q > limit) break;
    q_prev2 = q_prev;
    q_prev = q;
  }
  const std::uint64_t best = q_prev.get_ui();
  const RealExpr form = mpz_class(static_cast<unsigned long>(best)) * alpha.expr();

  FracDist fd = frac_and_dist(form, 96);
  for (long bits = 192; !fd.decided; bits *= 2) fd = frac_and_dist(form, std::min(bits, precision_cap()));
  MinDist out{fd.dist, best};

  if (N <= kMinDistScanLimit) {
    const FixedAngle step = FixedAngle::of(alpha.expr());
    FixedAngle cur{};
    std::uint64_t scan_best = 1;
    Approx scan_val{1, 0};
    for (std::uint64_t n = 1; n <= N; ++n) {
      cur = cur + step;
      const Approx d = cur.dist();
      if (d.v < scan_val.v) {
        scan_val = d;
        scan_best = n;
      }
    }
    if (scan_best != best) {
      // The scan picked a different n; only acceptable if the two values
      // cannot be separated by the filter and the exact path agrees.
      const RealExpr other = mpz_class(static_cast<unsigned long>(scan_best)) * alpha.expr();
      const Ordering o = decide_sign([&](mpfr_prec_t p) { return dist_interval(other, p) - dist_interval(form, p); });
      if (o == Ordering::less) throw std::logic_error("min_dist: convergent route disagrees with direct scan");
    }
  }
  return out;
}

Interval exponent_interval(const RealExpr& form, std::uint64_t height, mpfr_prec_t prec) {
  return certified_exponent(form, height, prec);
}

SigmaEntry sigma_single(const RealParam& gamma, std::uint64_t N, bool allow_literal) {
  return sigma_profile_single(gamma, N, allow_literal).entries.back();
}

DiophantineProfile sigma_profile_single(const RealParam& gamma, std::uint64_t N_max, bool allow_literal) {
  require_sigma_input(gamma, allow_literal, "sigma_single");
  return profile(gamma, nullptr, N_max);
}

SigmaEntry sigma_pair(const RealParam& gamma, const RealParam& beta, std::uint64_t N, bool allow_literal) {
  return sigma_profile_pair(gamma, beta, N, allow_literal).entries.back();
}

DiophantineProfile sigma_profile_pair(const RealParam& gamma, const RealParam& beta, std::uint64_t N_max,
                                      bool allow_literal) {
  if (!allow_literal && (gamma.is_literal() || beta.is_literal()))
    throw IrrationalRequired("sigma_pair: decimal literals may be rational; pass the literal override to proceed");
  if (N_max > kSigmaPairCap) throw DomainError("sigma_pair is capped at N = " + std::to_string(kSigmaPairCap));
  return profile(gamma, &beta, N_max);
}

Interval omega_schedule_interval(std::uint64_t q, const mpq_class& c, OmegaKind kind, mpfr_prec_t prec) {
  if (q == 0) throw DomainError("omega schedule needs q >= 1");
  if (c <= 0) throw DomainError("omega schedule needs c > 0");
  if (q <= 4) return Interval(1L, prec);
  const Interval l1 = log2(Interval(mpq_class(mpz_class(static_cast<unsigned long>(q))), prec));
  const Interval l2 = log2(l1);
  const Interval inner = kind == OmegaKind::triple_log ? log2(l2) : l2;
  return Interval(c, prec) / sqrt(inner);
}

Enclosure omega_schedule(std::uint64_t q, const mpq_class& c, OmegaKind kind) {
  return Enclosure::from_interval(omega_schedule_interval(q, c, kind, 128));
}

}  // namespace mdl::cfrac
