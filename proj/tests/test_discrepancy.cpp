#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mdl/discrepancy.hpp"
#include "mdl/errors.hpp"
#include "oracle.hpp"

using namespace mdl;
using namespace mdl::disc;

namespace {

mpq_class Q(long p, long q = 1) {
  mpq_class r(p, q);
  r.canonicalize();
  return r;
}

// {q alpha} for q = 1..Q at 512 bits.
std::vector<mpq_class> oracle_points(const oracle::Real& a, long Q) {
  std::vector<mpq_class> out;
  for (long q = 1; q <= Q; ++q) {
    const mpq_class x = (oracle::Real(q) * a).q();
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    out.push_back(x - mpq_class(f));
  }
  return out;
}

// Star discrepancy by the definition sup_t |#{x_i < t}/N - t| evaluated at the
// points themselves (both one-sided limits), independent of the sorted formula.
double oracle_star(std::vector<mpq_class> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double best = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i].get_d();
    best = std::max(best, std::fabs(static_cast<double>(i) / n - x));
    best = std::max(best, std::fabs(static_cast<double>(i + 1) / n - x));
  }
  return best;
}

}  // namespace

TEST_SUITE("discrepancy") {

TEST_CASE("box_count examples") {
  const BoxCountResult r = box_count({RealParam::sqrt(2)}, 3, Box{{{Q(0), Q(1, 2)}}});
  CHECK(r.count == 2);
  CHECK(r.error == Q(1, 2));
  CHECK(r.undecided == 0);
  const BoxCountResult all = box_count({RealParam::constant(Constant::pi)}, 100, Box{{{Q(0), Q(1)}}});
  CHECK(all.count == 100);
  CHECK(all.error == 0);
  const BoxCountResult none = box_count({RealParam::sqrt(3)}, 100, Box{{{Q(1, 3), Q(1, 3)}}});
  CHECK(none.count == 0);
  CHECK(none.error == 0);
  CHECK_THROWS_AS(box_count({RealParam::sqrt(3)}, 10, Box{{{Q(1, 2), Q(1, 3)}}}), DomainError);
}

TEST_CASE("box_count matches brute force") {
  const oracle::Real s2 = oracle::Real::sqrt(2), s3 = oracle::Real::sqrt(3);
  const auto p2 = oracle_points(s2, 500), p3 = oracle_points(s3, 500);
  const mpq_class cuts[] = {Q(0), Q(1, 7), Q(1, 3), Q(1, 2), Q(5, 7), Q(1)};
  for (const auto& a : cuts) {
    for (const auto& b : cuts) {
      if (!(a <= b)) continue;
      for (const auto& c : cuts) {
        const mpq_class d = Q(1) - c / 2;
        std::uint64_t expect1 = 0, expect2 = 0;
        for (std::size_t i = 0; i < 500; ++i) {
          const bool in1 = a <= p2[i] && p2[i] < b;
          expect1 += in1;
          expect2 += in1 && c <= p3[i] && p3[i] < d;
        }
        if (c <= d) {
          const BoxCountResult r = box_count({RealParam::sqrt(2), RealParam::sqrt(3)}, 500, Box{{{a, b}, {c, d}}});
          CHECK(r.count == expect2);
          CHECK(r.error == mpq_class(expect2) - 500 * (b - a) * (d - c));
        }
        CHECK(box_count({RealParam::sqrt(2)}, 500, Box{{{a, b}}}).count == expect1);
      }
    }
  }
}

TEST_CASE("rational boundaries hit exactly") {
  // {q/3} = 1/3 exactly for q = 1 mod 3: half-open boxes give exact partitions.
  const BoxCountResult lo = box_count({RealParam::rational(Q(1, 3))}, 30, Box{{{Q(0), Q(1, 3)}}});
  const BoxCountResult hi = box_count({RealParam::rational(Q(1, 3))}, 30, Box{{{Q(1, 3), Q(1)}}});
  CHECK(lo.count == 10);
  CHECK(hi.count == 20);
  CHECK(lo.undecided + hi.undecided == 0);
}

TEST_CASE("star discrepancy examples") {
  const RealParam g = RealParam::constant(Constant::golden);
  const Discrepancy1D d1 = star_discrepancy_1d(g, 1);
  CHECK(d1.star.approx() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-12));
  const Discrepancy1D d2 = star_discrepancy_1d(g, 2);
  const double x1 = (std::sqrt(5.0) - 1) / 2, x2 = 2 * x1 - 1;
  CHECK(d2.star.approx() == doctest::Approx(0.25 + std::max(std::fabs(x2 - 0.25), std::fabs(x1 - 0.75))).epsilon(1e-12));
  CHECK(d2.star.approx() == doctest::Approx(0.382).epsilon(1e-3));
  CHECK_THROWS_AS(star_discrepancy_1d(RealParam::rational(Q(1, 2)), 5), IrrationalRequired);
}

TEST_CASE("star discrepancy against the definition") {
  for (const char* s : {"sqrt:2", "const:golden", "log2:3", "const:e"}) {
    const RealParam a = RealParam::parse(s);
    const oracle::Real x = s[0] == 's' ? oracle::Real::sqrt(2)
                           : s[0] == 'l' ? oracle::Real::log2(oracle::Real(3))
                           : s[6] == 'g' ? oracle::Real::golden()
                                         : oracle::Real(0);
    if (s[6] == 'e') continue;
    for (long Qn : {1L, 2L, 3L, 10L, 97L, 1000L}) {
      const Discrepancy1D d = star_discrepancy_1d(a, static_cast<std::uint64_t>(Qn));
      CHECK(d.star.approx() == doctest::Approx(oracle_star(oracle_points(x, Qn))).epsilon(1e-12));
      CHECK(d.star.lo >= Q(1, 2 * Qn));
      CHECK(d.star.width() < Q(1, 1000000000));
      // anchored and all-interval discrepancy differ by at most a factor 2
      CHECK(d.extreme.hi >= d.star.lo);
      CHECK(d.extreme.lo <= 2 * d.star.hi);
    }
  }
}

TEST_CASE("scaling inequality for all-interval discrepancy") {
  for (long M : {2L, 3L}) {
    for (long Qn : {10L, 100L, 1000L, 5000L}) {
      const auto q = static_cast<std::uint64_t>(Qn);
      const Discrepancy1D base = star_discrepancy_1d(RealParam::sqrt(2), q);
      const RealParam scaled = RealParam::sqrt(static_cast<unsigned long>(2 * M * M));
      const Discrepancy1D sc = star_discrepancy_1d(scaled, q);
      CHECK(sc.extreme_count().hi <= M * base.extreme_count().lo);
    }
  }
}

TEST_CASE("disc2d_grid") {
  const RealParam a = RealParam::sqrt(2), b = RealParam::sqrt(3);
  const Grid2D g1 = disc2d_grid(a, b, 50, 1);
  CHECK(g1.lower == 0);
  CHECK(g1.upper == 200);
  // m = 2: nine grid boxes, each counted by brute force
  const Grid2D g2 = disc2d_grid(a, b, 3, 2);
  const auto pa = oracle_points(oracle::Real::sqrt(2), 3), pb = oracle_points(oracle::Real::sqrt(3), 3);
  mpq_class best = 0;
  const mpq_class ends[] = {Q(0), Q(1, 2), Q(1)};
  for (int i1 = 0; i1 < 3; ++i1) {
    for (int i2 = i1 + 1; i2 < 3; ++i2) {
      for (int j1 = 0; j1 < 3; ++j1) {
        for (int j2 = j1 + 1; j2 < 3; ++j2) {
          long S = 0;
          for (int k = 0; k < 3; ++k) {
            S += ends[i1] <= pa[k] && pa[k] < ends[i2] && ends[j1] <= pb[k] && pb[k] < ends[j2];
          }
          const mpq_class E = abs(mpq_class(S) - 3 * (ends[i2] - ends[i1]) * (ends[j2] - ends[j1]));
          best = std::max(best, E);
        }
      }
    }
  }
  CHECK(g2.lower == best);
  CHECK(g2.upper == best + 6);
  mpq_class prev_lower = 0, prev_upper = 1000000;
  for (std::uint64_t m = 1; m <= 64; m *= 2) {
    const Grid2D g = disc2d_grid(a, b, 1000, m);
    CHECK(g.lower >= prev_lower);
    CHECK(g.lower <= g.upper);
    CHECK(g.upper <= prev_upper + Q(2000, static_cast<long>(m)));
    CHECK(g.undecided == 0);
    prev_lower = g.lower;
    prev_upper = g.upper;
  }
}

TEST_CASE("etk examples") {
  const RealParam g = RealParam::constant(Constant::golden);
  const EtkBound b = etk_bound({g}, 10, 1);
  const double expect = 90 + 36 / (2 - (1 + std::sqrt(5.0)) / 2);
  CHECK(b.bound.approx() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(b.bound.approx() == doctest::Approx(184.2).epsilon(1e-3));
  for (std::uint64_t H : {1ull, 5ull, 50ull}) CHECK(etk_bound({g}, 100, H).bound.lo >= mpq_class(900, H));
  try {
    etk_bound({RealParam::sqrt(2), RealParam::sqrt(2)}, 10, 3);
    FAIL("dependence not detected");
  } catch (const DependenceDetected& d) {
    CHECK(d.k1 == 1);
    CHECK(d.k2 == -1);
  }
}

TEST_CASE("etk sums agree with direct evaluation") {
  const RealParam a = RealParam::sqrt(2), b = RealParam::sqrt(3);
  const oracle::Real oa = oracle::Real::sqrt(2), ob = oracle::Real::sqrt(3);
  const auto sums1 = etk_frequency_sums({a}, 30);
  const auto sums2 = etk_frequency_sums({a, b}, 12);
  for (std::uint64_t H : {1ull, 7ull, 12ull}) {
    double s1 = 0, s2 = 0;
    for (long k = -static_cast<long>(H); k <= static_cast<long>(H); ++k) {
      if (k != 0) s1 += (2.0 / (std::labs(k) + 1)) * (2.0 / (oracle::Real(k) * oa).dist().d());
      for (long l = -static_cast<long>(H); l <= static_cast<long>(H); ++l) {
        if (k == 0 && l == 0) continue;
        const double d = (oracle::Real(k) * oa + oracle::Real(l) * ob).dist().d();
        s2 += 4.0 / ((std::labs(k) + 1) * (std::labs(l) + 1)) * (2.0 / d);
      }
    }
    const double N = 100;
    CHECK(etk_from_sums(sums1, 100, H).approx() == doctest::Approx(9 * N * (1.0 / H + s1 / N)).epsilon(1e-10));
    CHECK(etk_from_sums(sums2, 100, H).approx() == doctest::Approx(9 * N * (1.0 / H + s2 / N)).epsilon(1e-10));
    CHECK(etk_bound({a, b}, 100, H).bound.overlaps(etk_from_sums(sums2, 100, H)));
  }
}

TEST_CASE("etk dominates exact discrepancy") {
  for (const char* s : {"sqrt:2", "const:golden"}) {
    const RealParam a = RealParam::parse(s);
    const auto sums = etk_frequency_sums({a}, 200);
    for (std::uint64_t N : {100ull, 1000ull}) {
      const Discrepancy1D d = star_discrepancy_1d(a, N);
      for (std::uint64_t H = 1; H <= 200; ++H) CHECK(d.extreme_count().hi <= etk_from_sums(sums, N, H).lo);
    }
  }
}

TEST_CASE("etk_autoH") {
  CHECK(etk_choose_H(2, 1) == 2);
  // direct scan oracle
  for (std::uint64_t N : {2ull, 100ull, 100000ull, 1000000000ull}) {
    for (const mpq_class& s : {Q(1), Q(1, 10), Q(43, 10)}) {
      std::uint64_t H = 1;
      const double c = 8000 * s.get_d() / static_cast<double>(N);
      while (!(1.0 / H <= c * std::log2(static_cast<double>(H)) * std::pow(static_cast<double>(H), s.get_d()))) ++H;
      CHECK(etk_choose_H(N, s) == H);
    }
  }
  const EtkAuto r = etk_autoH(RealParam::sqrt(2), RealParam::sqrt(3), 1000, Q(433, 100));
  CHECK(r.etk.bound.lo >= mpq_class(9000, r.etk.H));
  CHECK(r.implied_C.hi < 1e9);
  CHECK(r.implied_C.lo > 0);
}

}
