#include <doctest.h>

#include <numeric>

#include "mdl/arith.hpp"
#include "mdl/errors.hpp"
#include "mdl/gallagher.hpp"
#include "oracle.hpp"

using namespace mdl;
using namespace mdl::gal;
using oracle::Real;

namespace {

mpq_class Q(long p, long q = 1) {
  mpq_class r(p, q);
  r.canonicalize();
  return r;
}

RealParam P(const char* s) { return RealParam::parse(s); }

PsiPrime fibred(const char* psi, const char* beta, const char* gp, std::optional<OmegaSpec> w) {
  return PsiPrime{ApproxFunction::parse(psi), Fibre{P(beta), P(gp), w}};
}

Real pow_real(const Real& x, const mpq_class& e) {
  // x^e = 2^(e log2 x), computed through a 512-bit log/exp pair
  const Real l = Real::log2(x) * Real(e);
  mpfr_t t;
  mpfr_init2(t, oracle::kPrec);
  mpq_class lq = l.q();
  mpfr_set_q(t, lq.get_mpq_t(), MPFR_RNDN);
  mpfr_exp2(t, t, MPFR_RNDN);
  mpq_class out;
  mpfr_get_q(out.get_mpq_t(), t);
  mpfr_clear(t);
  return Real(out);
}

// -1 outside, else l with 2^l q^-w <= d < 2^(l+1) q^-w
long oracle_cell(const Real& d, long q, const mpq_class& w) {
  const Real v = d * pow_real(Real(q), w);
  if (v < Real(1)) return -1;
  long l = 0;
  while (!(v < Real(Q(1L << (l + 1))))) ++l;
  return l;
}

Real sqrt_val(long n) { return Real::sqrt(n); }

}  // namespace

TEST_SUITE("gallagher") {

TEST_CASE("approximation functions: q0, values and monotonicity") {
  CHECK(ApproxFunction::parse("inv:1/2").q0() == 2);
  CHECK(ApproxFunction::parse("inv:1/4").q0() == 1);
  CHECK(ApproxFunction::parse("const:1/10").q0() == 1);
  CHECK_THROWS_AS(ApproxFunction::parse("const:1/2"), DomainError);
  CHECK_THROWS_AS(ApproxFunction::parse("wobble:1"), DomainError);

  // first q where the closed form drops below 1/2, found by a direct oracle scan
  for (const char* spec : {"invlog2:1/2", "invlog2:5", "gallagher:1", "gallagher:3", "mono2:2"}) {
    const ApproxFunction f = ApproxFunction::parse(spec);
    long q = f.family() == Family::invlog2 ? 2 : 3;
    for (;; ++q) {
      const Real L = Real::log2(Real(q));
      Real den = Real(q) * L;
      if (f.family() == Family::invlog2) den = den * L;
      if (f.family() == Family::gallagher) den = den * Real::log2(L) * Real::log2(L);
      if (f.family() == Family::mono2) {
        Real s = Real::log2(L);
        const double sd = std::sqrt(s.d());
        den = den * L * Real(Q(static_cast<long>(sd * 1e15), 1000000000000000L));
      }
      if (Real(f.c()) / den < Real(Q(1, 2))) break;
    }
    CHECK(f.q0() == static_cast<std::uint64_t>(q));
    CHECK(f.monotone());
    CHECK_THROWS_AS(psi_eval(f, f.q0() - 1), DomainError);
    for (std::uint64_t k = f.q0(); k < f.q0() + 50; ++k) CHECK(psi_eval(f, k).hi < Q(1, 2));
  }

  const ApproxFunction g = ApproxFunction::parse("gallagher:1");
  for (long q : {3L, 10L, 1000L, 123457L}) {
    const Real L = Real::log2(Real(q));
    const Real ref = Real(1) / (Real(q) * L * Real::log2(L) * Real::log2(L));
    const Enclosure e = psi_eval(g, q);
    CHECK(e.contains(ref.q()));
    CHECK(e.width() < Q(1, 1000000) * e.lo);
  }
  const ApproxFunction inv = ApproxFunction::parse("inv:1/4");
  CHECK(psi_eval(inv, 7) == Enclosure::exact(Q(1, 28)));

  const ApproxFunction t = ApproxFunction::parse("table@3:1/10,1/5,1/20");
  CHECK(t.q0() == 3);
  CHECK(t.q_max() == 5);
  CHECK_FALSE(t.monotone());
  CHECK(psi_eval(t, 4) == Enclosure::exact(Q(1, 5)));
  CHECK_THROWS_AS(psi_eval(t, 6), DomainError);
  CHECK(ApproxFunction::parse(t.to_string()).to_string() == t.to_string());
}

TEST_CASE("psi' example values") {
  const PsiPrime pp = fibred("inv:1/2", "sqrt:2", "rat:0", OmegaSpec::constant(1));
  const PsiPrimeValue at4 = psi_prime(pp, 4);
  CHECK(at4.status == Status::support);
  const Real ref = Real(Q(1, 8)) / (Real(4) * sqrt_val(2)).dist();
  CHECK(at4.value.contains(ref.q()));
  CHECK(at4.value.approx() == doctest::Approx(0.3643).epsilon(1e-3));

  const PsiPrimeValue at2 = psi_prime(pp, 2);
  CHECK(at2.status == Status::outside);
  CHECK(at2.value == Enclosure::exact(0));
  CHECK_THROWS_AS(psi_prime(pp, 1), DomainError);

  const SumResult s = divergence_sum(pp, 4);
  CHECK(s.undecided == 0);
  CHECK(s.value.contains(ref.q()));
}

TEST_CASE("psi' agrees with a direct oracle over a range") {
  for (const mpq_class& w : {Q(1), Q(1, 4), Q(2, 3)}) {
    const PsiPrime pp = fibred("inv:1/4", "sqrt:3", "rat:1/5", OmegaSpec::constant(w));
    const PsiPrimeTable t = psi_prime_table(pp, 3000);
    CHECK(t.undecided() == 0);
    for (long q = 1; q <= 3000; ++q) {
      const Real d = (Real(q) * sqrt_val(3) - Real(Q(1, 5))).dist();
      const bool in = oracle_cell(d, q, w) >= 0;
      REQUIRE((t.status[q - 1] == Status::support) == in);
      if (in) {
        const Real ref = Real(Q(1, 4 * q)) / d;
        CHECK(t.enclosure(q).contains(ref.q()));
        if (q % 97 == 0) CHECK(psi_prime(pp, q).value.contains(ref.q()));
      }
    }
  }
}

TEST_CASE("psi' with rational data uses the exact path") {
  // beta = 2/7: ||q beta|| = 0 for 7 | q; omega = 1/2 decided by d^2 q >= 1
  const PsiPrime pp = fibred("const:1/10", "rat:2/7", "rat:0", OmegaSpec::constant(Q(1, 2)));
  for (long q = 1; q <= 60; ++q) {
    const PsiPrimeValue v = psi_prime(pp, q);
    const mpq_class d = [&] {
      mpq_class f = Q(2 * q % 7, 7);
      return f > Q(1, 2) ? mpq_class(1 - f) : f;
    }();
    if (d == 0) {
      CHECK(v.status == Status::degenerate);
      continue;
    }
    const bool in = d * d * q >= 1;
    CHECK((v.status == Status::support) == in);
    if (in) CHECK(v.value == Enclosure::exact(Q(1, 10) / d));
  }
  // q = 8: d = 2/7, d^2 q = 32/49 < 1; q = 13: d = 2/7, 52/49 >= 1
  CHECK(psi_prime(pp, 8).status == Status::outside);
  CHECK(psi_prime(pp, 13).status == Status::support);

  const PsiPrime untruncated = fibred("const:1/10", "rat:1/3", "rat:0", std::nullopt);
  CHECK(psi_prime(untruncated, 3).status == Status::degenerate);
  CHECK(psi_prime(untruncated, 4).value == Enclosure::exact(Q(3, 10)));
}

TEST_CASE("G^l census: example and partition of the support") {
  const Census c = gl_census(P("sqrt:2"), P("rat:0"), OmegaSpec::constant(1), 4);
  REQUIRE(c.cells.count(0) == 1);
  CHECK(c.cells.at(0) == std::vector<std::uint64_t>{4});
  CHECK(c.cells.size() == 1);

  struct Config {
    const char* beta;
    const char* gp;
    mpq_class w;
  };
  for (const Config& cfg : {Config{"sqrt:2", "rat:0", Q(1)}, Config{"const:golden", "rat:1/3", Q(1, 4)},
                            Config{"log2:3", "sqrt:5", Q(1, 2)}}) {
    const long N = 2000;
    const OmegaSpec w = OmegaSpec::constant(cfg.w);
    const Census census = gl_census(P(cfg.beta), P(cfg.gp), w, N);
    CHECK(census.undecided.empty());
    CHECK(census.degenerate.empty());
    std::vector<long> cell(N + 1, -1);
    std::size_t total = 0;
    for (const auto& [l, members] : census.cells) {
      CHECK(l >= 0);
      total += members.size();
      for (auto q : members) {
        CHECK(cell[q] == -1);
        cell[q] = l;
      }
    }
    const PsiPrime pp{ApproxFunction::parse("const:1/10"), Fibre{P(cfg.beta), P(cfg.gp), w}};
    const PsiPrimeTable t = psi_prime_table(pp, N);
    std::size_t support = 0;
    for (long q = 1; q <= N; ++q) {
      const bool in = t.status[q - 1] == Status::support;
      support += in;
      CHECK(in == (cell[q] >= 0));
      if (q % 7 == 0) {
        RealExpr form = mpz_class(q) * P(cfg.beta).expr() - P(cfg.gp).expr();
        const Interval d = dist_interval(form, 600);
        const Real dr(d.lo_q());
        CHECK(oracle_cell(dr, q, cfg.w) == cell[q]);
      }
    }
    CHECK(support == total);
  }
}

TEST_CASE("schedule omega census matches single-q cells") {
  const OmegaSpec w = OmegaSpec::parse("sched:1/2");
  const Census c = gl_census(P("sqrt:3"), P("rat:0"), w, 500);
  CHECK(c.undecided.empty());
  for (const auto& [l, members] : c.cells) {
    for (auto q : members) CHECK(gl_cell(P("sqrt:3"), P("rat:0"), w, q) == l);
  }
  CHECK(OmegaSpec::parse(w.to_string()).to_string() == "sched:1/2");
}

TEST_CASE("S_klr: example and brute-force oracle") {
  const PsiPrime pp = fibred("const:1/24", "sqrt:2", "rat:0", OmegaSpec::constant(1));
  const SklrResult ex = sklr_sum(pp, P("sqrt:3"), 12, 1, 0, 4);
  CHECK(ex.count == 0);
  CHECK(ex.undecided == 0);
  CHECK_THROWS_AS(sklr_sum(pp, P("sqrt:3"), 12, 1, 0, 5), NotADivisor);

  auto psi_p = [](long q) -> Real {
    const Real d = (Real(q) * sqrt_val(2)).dist();
    if (d < Real(Q(1, q))) return Real(0);
    return Real(Q(1, 24)) / d;
  };
  long nonzero = 0;
  for (long q : {12L, 30L, 60L, 84L, 120L, 210L}) {
    for (long r = 1; r <= q; ++r) {
      if (q % r) continue;
      for (long k = 0; k <= 2; ++k) {
        for (long l = 0; l <= 2; ++l) {
          long count = 0;
          for (long qp = 1; qp < q; ++qp) {
            if (std::gcd(qp, q) != r) continue;
            if (qp * (1L << (k + 1)) < q || qp * (1L << k) > q) continue;
            const Real d = (Real(qp) * sqrt_val(2)).dist();
            if (oracle_cell(d, qp, Q(1)) != l) continue;
            const Real delta = (Real(q) * psi_p(qp) + Real(qp) * psi_p(q)) / Real(r);
            const Real x = (Real((qp - q) / r) * sqrt_val(3)).dist();
            if (!(delta < x)) ++count;
          }
          const SklrResult s = sklr_sum(pp, P("sqrt:3"), q, k, l, r);
          CHECK(s.undecided == 0);
          CHECK(s.count == static_cast<std::uint64_t>(count));
          nonzero += count;
        }
      }
    }
  }
  CHECK(nonzero > 0);
}

TEST_CASE("divergence sums, S_klr and F moments: small cases") {
  const PsiPrime pp = fibred("inv:1/2", "sqrt:2", "rat:0", OmegaSpec::constant(1));
  CHECK(divergence_sum(pp, 3).value == Enclosure::exact(0));
  Enclosure prev = Enclosure::exact(0);
  for (std::uint64_t n = 2; n <= 60; ++n) {
    const Enclosure cur = divergence_sum(pp, n).value;
    CHECK(cur.hi >= prev.lo);
    CHECK(cur.lo >= prev.lo);
    prev = cur;
  }
  const PsiPrime c24 = fibred("const:1/24", "sqrt:2", "rat:0", OmegaSpec::constant(1));
  CHECK(sklr_sum(c24, P("sqrt:3"), 12, 10, 0, 1).count == 0);

  const OmegaSpec w1 = OmegaSpec::constant(1);
  CHECK(f_moment_sum(P("sqrt:2"), P("rat:0"), w1, 8, 5, 1).sum == Enclosure::exact(0));
  CHECK(f_moment_sum(P("sqrt:2"), P("rat:0"), w1, 8, 5, 1).members == 0);
  // Q = 8, l = 0: members q in [4, 8] with 1 <= q ||q sqrt2|| < 2, by direct evaluation
  Real ref(0);
  mpq_class ref1 = 0;
  std::uint64_t members = 0;
  for (long q = 4; q <= 8; ++q) {
    const Real v = Real(q) * (Real(q) * sqrt_val(2)).dist();
    if (v < Real(1) || !(v < Real(2))) continue;
    ++members;
    Real F(0);
    for (long d = 1; d <= q; ++d) {
      if (q % d == 0) F = F + Real::log2(Real(d)) / Real(d);
    }
    ref = ref + F * F;
    ref1 += arith::F_of(q).mid();
  }
  const FMoment m2 = f_moment_sum(P("sqrt:2"), P("rat:0"), w1, 8, 0, 2);
  CHECK(members > 0);
  CHECK(m2.members == members);
  CHECK(m2.sum.contains(ref.q()));
  const FMoment m1 = f_moment_sum(P("sqrt:2"), P("rat:0"), w1, 8, 0, 1);
  CHECK(m1.sum.lo - ref1 < Q(1, 1000000));
  CHECK(ref1 - m1.sum.hi < Q(1, 1000000));
}

TEST_CASE("F moments over a G^l cell") {
  const OmegaSpec w = OmegaSpec::constant(Q(1, 2));
  const FMoment m = f_moment_sum(P("sqrt:2"), P("rat:0"), w, 400, 1, 2);
  const Census c = gl_census(P("sqrt:2"), P("rat:0"), w, 400);
  Real ref(0);
  std::uint64_t members = 0;
  for (auto q : c.cells.at(1)) {
    if (q < 200) continue;
    ++members;
    Real F(0);
    for (long d = 1; d <= static_cast<long>(q); ++d) {
      if (q % d == 0) F = F + Real::log2(Real(d)) / Real(d);
    }
    ref = ref + F * F;
  }
  CHECK(m.members == members);
  CHECK(m.undecided == 0);
  CHECK(m.sum.contains(ref.q()));
  // Q^(1/2) 2^2 = 80
  CHECK(m.reference.contains(Q(80)));
}

TEST_CASE("BC ratio and union examples") {
  const PsiPrime pp{ApproxFunction::parse("const:1/10"), std::nullopt};
  const BCSeries s = bc_ratio(pp, P("rat:0"), 3);
  CHECK(s.back().Q == 3);
  CHECK(s.back().ratio == Q(27, 80));
  CHECK(s.back().ratio_enclosure == Enclosure::exact(Q(27, 80)));
  CHECK(s.back().pair_sum.value == Q(7, 30));
  CHECK(s.entries.front().ratio == Q(1, 5));

  const UnionSeries u = union_series(pp, P("rat:0"), 1, 6);
  CHECK(u.measures[0].value == Q(1, 5));
  CHECK(u.measures[1].value == Q(3, 10));
  for (std::size_t i = 1; i < u.measures.size(); ++i) CHECK(u.measures[i].value >= u.measures[i - 1].value);

  // identical events: ratio = m; two disjoint events: ratio = a + b
  const PsiPrime single{ApproxFunction::parse("table@1:1/8"), std::nullopt};
  CHECK(bc_ratio(single, P("rat:0"), 1).back().ratio == Q(1, 4));
  const PsiPrime two{ApproxFunction::parse("table@2:1/16,1/16"), std::nullopt};
  // A_2 around 1/4, 3/4 (gamma = 1/2) and A_3 around 1/6, 1/2, 5/6 with radius 1/48: disjoint
  const BCSeries dis = bc_ratio(two, P("rat:1/2"), 3);
  CHECK(dis.back().pair_sum.value == 0);
  CHECK(dis.back().ratio == Q(1, 8) + Q(1, 8));

  // the union never exceeds the sum of measures, and the ratio is at most 1
  const PsiPrime inv{ApproxFunction::parse("inv:1/4"), std::nullopt};
  const BCSeries bs = bc_ratio(inv, P("sqrt:3"), 200);
  const UnionSeries us = union_series(inv, P("sqrt:3"), 1, 200);
  for (std::size_t i = 0; i < bs.entries.size(); ++i) {
    CHECK(bs.entries[i].ratio_enclosure.lo <= 1);
    CHECK(us.measures[i].enclosure().lo <= bs.entries[i].measure_sum.enclosure().hi);
    // Chung-Erdos: |union| >= (sum |A_q|)^2 / sum_{q,q'} |A_q cap A_q'|
    CHECK(us.measures[i].enclosure().hi >= bs.entries[i].ratio_enclosure.lo);
  }
}

TEST_CASE("BC ratio with a fibred psi' brackets the union") {
  const PsiPrime pp = fibred("invlog2:1/2", "sqrt:3", "rat:0", OmegaSpec::constant(Q(1, 4)));
  const BCSeries bs = bc_ratio(pp, P("sqrt:2"), 120);
  const UnionSeries us = union_series(pp, P("sqrt:2"), 1, 120);
  CHECK(bs.undecided == 0);
  REQUIRE(!bs.entries.empty());
  CHECK(bs.entries.front().Q > 2);
  CHECK(us.measures[bs.entries.front().Q - 2].value > 0);
  CHECK(us.measures[bs.entries.front().Q - 3].value == 0);
  for (const BCEntry& e : bs.entries) {
    CHECK(us.measures[e.Q - us.Q0].enclosure().hi >= e.ratio_enclosure.lo);
    CHECK(e.ratio_enclosure.contains(e.ratio));
    CHECK(e.ratio_enclosure.lo > 0);
    CHECK(e.ratio_enclosure.hi <= 1);
  }
  const PsiPrime none = fibred("const:1/10", "rat:0", "rat:0", std::nullopt);
  CHECK_THROWS_AS(bc_ratio(none, P("rat:0"), 10), DomainError);
}

TEST_CASE("hit counts") {
  const PsiPrime tenth = fibred("const:1/10", "sqrt:2", "rat:0", std::nullopt);
  CHECK(hit_count(P("rat:0"), P("rat:0"), tenth, 50).count == 50);
  CHECK(hit_count(P("rat:1/2"), P("rat:0"), tenth, 2).count == 1);

  const PsiPrime rat_beta = fibred("const:1/10", "rat:1/3", "rat:0", std::nullopt);
  const HitCount h = hit_count(P("sqrt:5"), P("rat:0"), rat_beta, 30);
  CHECK(h.degenerate == 10);

  // direct oracle
  for (const char* x : {"sqrt:5", "rat:3/11", "const:pi"}) {
    const PsiPrime pp = fibred("inv:1/2", "sqrt:2", "rat:1/7", OmegaSpec::constant(Q(1, 2)));
    const HitCount hc = hit_count(P(x), P("sqrt:3"), pp, 2000);
    const RealExpr xe = P(x).expr();
    long ref = 0;
    for (long q = 2; q <= 2000; ++q) {
      const Real db = (Real(q) * sqrt_val(2) - Real(Q(1, 7))).dist();
      if (oracle_cell(db, q, Q(1, 2)) < 0) continue;
      const Interval xi = (mpz_class(q) * xe).interval(600);
      const Real dx = (Real(xi.lo_q()) - sqrt_val(3)).dist();
      if (dx * db < Real(Q(1, 2 * q))) ++ref;
    }
    CHECK(hc.undecided == 0);
    CHECK(hc.count == static_cast<std::uint64_t>(ref));
  }
  const PsiPrime plain{ApproxFunction::parse("inv:1/4"), std::nullopt};
  const HitCount hp = hit_count(P("sqrt:7"), P("const:e"), plain, 5000);
  long ref = 0;
  Real e(0);
  {
    mpfr_t t;
    mpfr_init2(t, oracle::kPrec);
    mpfr_set_ui(t, 1, MPFR_RNDN);
    mpfr_exp(t, t, MPFR_RNDN);
    mpq_class eq;
    mpfr_get_q(eq.get_mpq_t(), t);
    mpfr_clear(t);
    e = Real(eq);
  }
  for (long q = 1; q <= 5000; ++q) {
    if ((Real(q) * sqrt_val(7) - e).dist() < Real(Q(1, 4 * q))) ++ref;
  }
  CHECK(hp.count == static_cast<std::uint64_t>(ref));
}

TEST_CASE("Monte Carlo survey is deterministic and thread independent") {
  const PsiPrime pp{ApproxFunction::parse("inv:1/4"), std::nullopt};
  const MCResult a = mc_survey(P("sqrt:3"), pp, 2000, 40, 7, 1);
  const MCResult b = mc_survey(P("sqrt:3"), pp, 2000, 40, 7, 4);
  CHECK(a.counts == b.counts);
  CHECK(a.mean == b.mean);
  CHECK(a.undecided == 0);
  // expected = sum_{q<=2000} 1/(2q)
  mpq_class h = 0;
  for (long q = 1; q <= 2000; ++q) h += Q(1, 2 * q);
  CHECK(a.expected.contains(h));
  CHECK(a.expected.width() < Q(1, 1000000000));
  const MCResult c = mc_survey(P("sqrt:3"), pp, 2000, 40, 8, 1);
  CHECK(c.counts != a.counts);
  CHECK(sample_u64(7, 3) == sample_u64(7, 3));
  CHECK(sample_u64(7, 3) != sample_u64(7, 4));

  // each count is the exact hit count of the sampled rational x
  for (std::size_t s = 0; s < 3; ++s) {
    mpq_class x(mpz_class(static_cast<unsigned long>(sample_u64(7, s))), mpz_class(1) << 64);
    x.canonicalize();
    CHECK(hit_count(RealParam::rational(x), P("sqrt:3"), pp, 2000).count == a.counts[s]);
  }
}

TEST_CASE("Monte Carlo edge cases") {
  // beta = 0: every q is degenerate, psi' vanishes
  const PsiPrime zero = fibred("const:1/10", "rat:0", "rat:0", std::nullopt);
  const MCResult z = mc_survey(P("sqrt:2"), zero, 50, 5, 1);
  CHECK(z.mean == 0);
  CHECK(z.expected == Enclosure::exact(0));
  // a single q with psi'(q) >= 1/2 contributes 1
  const PsiPrime big = fibred("table@1:2/5", "rat:1/2", "rat:0", std::nullopt);
  const MCResult b = mc_survey(P("sqrt:2"), big, 1, 5, 1);
  CHECK(b.expected == Enclosure::exact(1));
  CHECK(b.mean == 1);
}

TEST_CASE("doubly metric sampling") {
  const DMSample dep = doubly_metric_check(P("sqrt:2"), P("sqrt:2"), 3, 50);
  CHECK(dep.failed);
  CHECK(dep.dependent);
  CHECK(dep.k1 == 1);
  CHECK(dep.k2 == -1);
  const DMSample dep2 = doubly_metric_check(P("sqrt:2"), P("sqrt:8"), 3, 10);
  CHECK(dep2.dependent);
  CHECK(dep2.k1 == 2);
  CHECK(dep2.k2 == -1);

  const DMResult r3 = doubly_metric_sample(P("sqrt:2"), 3, 50, 200, 11);
  const DMResult r4 = doubly_metric_sample(P("sqrt:2"), 4, 50, 200, 11);
  const DMResult r2 = doubly_metric_sample(P("sqrt:2"), Q(5, 2), 50, 200, 11);
  CHECK_THROWS_AS(doubly_metric_sample(P("sqrt:2"), 2, 50, 10, 11), DomainError);
  CHECK(r4.fraction <= r3.fraction);
  CHECK(r3.fraction <= r2.fraction);
  for (std::size_t i = 0; i < 200; ++i) {
    if (r4.per_sample[i].failed) CHECK(r3.per_sample[i].failed);
  }
  mpq_class bound = 0;
  for (long k = 2; k <= 50; ++k) bound += Q(4, k * k);
  CHECK(r3.union_bound == bound);
  CHECK(r3.fraction <= r3.union_bound / 2);

  // brute oracle for a few samples
  for (std::size_t s = 0; s < 5; ++s) {
    mpq_class b(mpz_class(static_cast<unsigned long>(sample_u64(11, s))), mpz_class(1) << 64);
    b.canonicalize();
    bool fails = false;
    for (long k1 = -20; k1 <= 20 && !fails; ++k1) {
      for (long k2 = -20; k2 <= 20; ++k2) {
        if (k1 == 0 || k2 == 0) continue;
        const long h = std::max(std::labs(k1), std::labs(k2));
        if (h < 2) continue;
        const Real d = (Real(k1) * sqrt_val(2) + Real(k2) * Real(b)).dist();
        if (!(Real(Q(1, h * h * h)) < d)) {
          fails = true;
          break;
        }
      }
    }
    CHECK(doubly_metric_check(P("sqrt:2"), RealParam::rational(b), 3, 20).failed == fails);
  }
}

}  // TEST_SUITE
