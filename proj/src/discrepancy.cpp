#include "mdl/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdl/errors.hpp"
#include "mdl/parallel.hpp"

namespace mdl::disc {

namespace {

constexpr long double kSuspect = 0x1p-100L;

// Rational threshold t in [0, 1] on the 2^-128 grid: t * 2^128 = floor + (exact ? 0 : fraction).
struct Threshold {
  mpq_class t;
  u128 floor = 0;
  bool exact = false;
  bool zero = false;
  bool one = false;
};

u128 to_u128(const mpz_class& z) {
  const mpz_class lo = z & ((mpz_class(1) << 64) - 1);
  const mpz_class hi = z >> 64;
  return (u128(hi.get_ui()) << 64) | u128(lo.get_ui());
}

Threshold threshold(const mpq_class& t) {
  Threshold th;
  th.t = t;
  th.zero = t == 0;
  th.one = t == 1;
  if (!th.zero && !th.one) {
    const mpq_class s = t * mpq_class(mpz_class(1) << 128);
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
    th.floor = to_u128(f);
    th.exact = s.get_den() == 1;
  }
  return th;
}

// x mod 1 against t using only the fixed-point ball.
Ordering fixed_cmp(const FixedAngle& x, const Threshold& t) {
  if (t.one) return Ordering::less;
  if (!x.wrap_safe()) return Ordering::undecided;
  if (t.zero) return x.value > x.err ? Ordering::greater : Ordering::undecided;
  if (x.value + x.err < t.floor) return Ordering::less;
  if (x.value - x.err > t.floor) return Ordering::greater;
  return Ordering::undecided;
}

// Rigorous x mod 1 against t with the fast filter first.
Ordering frac_cmp(const FixedAngle& x, const RealExpr& alpha, std::uint64_t q, const Threshold& t) {
  const Ordering o = fixed_cmp(x, t);
  if (o != Ordering::undecided) return o;
  if (t.zero) return compare_frac01(mpz_class(static_cast<unsigned long>(q)) * alpha, 0) == Ordering::equal
                         ? Ordering::equal
                         : Ordering::greater;
  return compare_frac01(mpz_class(static_cast<unsigned long>(q)) * alpha, t.t);
}

void check_box(const Box& box, std::size_t dims) {
  if (box.sides.size() != dims) throw DomainError("box dimension does not match the number of parameters");
  for (const auto& [a, b] : box.sides) {
    if (!(0 <= a && a <= b && b <= 1)) throw DomainError("box sides must satisfy 0 <= a <= b <= 1");
  }
}

void require_irrational(const RealParam& p, bool allow_literal, const char* what) {
  if (p.is_exact()) throw IrrationalRequired(std::string(what) + " needs an irrational parameter, got " + p.to_string());
  if (p.is_literal() && !allow_literal)
    throw IrrationalRequired(std::string(what) + ": decimal literal " + p.to_string() +
                             " may be rational; pass the literal override to proceed");
}

// |a| for a ball, as [lo, hi].
std::pair<long double, long double> abs_range(const Approx& a) {
  const long double lo = a.lo(), hi = a.hi();
  if (lo >= 0) return {lo, hi};
  if (hi <= 0) return {-hi, -lo};
  return {0.0L, std::max(-lo, hi)};
}

Approx range_ball(long double lo, long double hi) { return Approx{(lo + hi) / 2, (hi - lo) / 2} + Approx::exact(0); }

// Sorted certified orbit: points ordered by x mod 1, with each point's ball.
struct SortedOrbit {
  std::vector<std::uint64_t> q;  ///< q of the i-th smallest point
  std::vector<Approx> x;
};

SortedOrbit sorted_orbit(const RealParam& alpha, std::uint64_t Q) {
  std::vector<FixedAngle> pts = orbit(alpha, Q);
  const RealExpr a = alpha.expr();
  for (std::uint64_t i = 0; i < Q; ++i) {
    if (!pts[i].wrap_safe()) {
      pts[i] = FixedAngle::of(mpz_class(static_cast<unsigned long>(i + 1)) * a);
      if (!pts[i].wrap_safe()) throw CapExceeded("orbit point too close to 0 to place");
    }
  }
  std::vector<std::uint64_t> idx(Q);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::uint64_t i, std::uint64_t j) { return pts[i].value < pts[j].value; });
  for (std::uint64_t k = 0; k + 1 < Q; ++k) {
    const FixedAngle& lo = pts[idx[k]];
    const FixedAngle& hi = pts[idx[k + 1]];
    if (lo.value + lo.err < hi.value - hi.err) continue;
    const RealExpr x1 = mpz_class(static_cast<unsigned long>(idx[k] + 1)) * a;
    const RealExpr x2 = mpz_class(static_cast<unsigned long>(idx[k + 1] + 1)) * a;
    const Ordering o = decide_sign([&](mpfr_prec_t p) { return frac01_interval(x2, p) - frac01_interval(x1, p); });
    if (o == Ordering::less) {
      std::swap(idx[k], idx[k + 1]);
    } else if (o != Ordering::greater) {
      throw CapExceeded("two orbit points could not be ordered");
    }
  }
  SortedOrbit out;
  out.q.reserve(Q);
  out.x.reserve(Q);
  for (std::uint64_t i : idx) {
    out.q.push_back(i + 1);
    out.x.push_back(pts[i].frac01());
  }
  return out;
}

struct Shell {
  std::int64_t k1, k2;
};

std::vector<Shell> shell_pairs(std::int64_t h, bool pair) {
  std::vector<Shell> out;
  if (!pair) {
    out.push_back({h, 0});
    return out;
  }
  out.push_back({0, h});
  for (std::int64_t k1 = 1; k1 < h; ++k1) {
    out.push_back({k1, -h});
    out.push_back({k1, h});
  }
  for (std::int64_t k2 = -h; k2 <= h; ++k2) out.push_back({h, k2});
  return out;
}

// Contribution of every frequency of height h, times 9 (the 9N * 1/N cancels).
std::vector<Approx> shell_sums(const std::vector<RealParam>& params, std::uint64_t H_max) {
  if (params.empty() || params.size() > 2) throw DomainError("etk_bound supports 1 or 2 parameters");
  const bool pair = params.size() == 2;
  const RealExpr a = params[0].expr();
  const RealExpr b = pair ? params[1].expr() : RealExpr();
  const FixedAngle fa = FixedAngle::of(a);
  const FixedAngle fb = pair ? FixedAngle::of(b) : FixedAngle{};
  // 1D: 9 * 2 * 4/(k+1) per k > 0. 2D: 9 * 2 * 8/(...) per canonical pair.
  const long double weight = pair ? 144.0L : 72.0L;
  std::vector<Approx> out(H_max);
  for (std::uint64_t h = 1; h <= H_max; ++h) {
    Approx acc = Approx::exact(0);
    for (const Shell& s : shell_pairs(static_cast<std::int64_t>(h), pair)) {
      FixedAngle x = fa.times(s.k1);
      if (pair && s.k2 != 0) x = x + fb.times(s.k2);
      Approx d = x.dist();
      if (!(d.lo() > kSuspect)) {
        RealExpr form = mpz_class(static_cast<long>(s.k1)) * a;
        if (pair && s.k2 != 0) form += mpz_class(static_cast<long>(s.k2)) * b;
        if (compare_dist(form, 0) == Ordering::equal) throw DependenceDetected(s.k1, s.k2);
        for (mpfr_prec_t p = 256;; p *= 2) {
          const Interval di = dist_interval(form, p);
          if (di.is_positive()) {
            d = Approx::from(Enclosure::from_interval(di));
            break;
          }
          if (p > precision_cap()) throw CapExceeded("||" + form.to_string() + "|| not separated from 0");
        }
      }
      const long double den = static_cast<long double>(std::llabs(s.k1) + 1) * static_cast<long double>(std::llabs(s.k2) + 1);
      acc = acc + Approx::ratio(weight, den) / d;
    }
    out[h - 1] = acc;
  }
  return out;
}

}  // namespace

mpq_class Box::volume() const {
  mpq_class v = 1;
  for (const auto& [a, b] : sides) v *= b - a;
  return v;
}

std::vector<FixedAngle> orbit(const RealParam& alpha, std::uint64_t Q) {
  const FixedAngle step = FixedAngle::of(alpha.expr());
  std::vector<FixedAngle> out;
  out.reserve(Q);
  FixedAngle cur{};
  for (std::uint64_t q = 1; q <= Q; ++q) {
    cur = cur + step;
    out.push_back(cur);
  }
  return out;
}

BoxCountResult box_count(const std::vector<RealParam>& params, std::uint64_t Q, const Box& box) {
  if (params.empty() || params.size() > 2) throw DomainError("box_count supports dimension 1 or 2");
  check_box(box, params.size());
  const std::size_t dims = params.size();
  std::vector<std::vector<FixedAngle>> orbits;
  std::vector<RealExpr> exprs;
  std::vector<Threshold> lo, hi;
  for (std::size_t d = 0; d < dims; ++d) {
    orbits.push_back(orbit(params[d], Q));
    exprs.push_back(params[d].expr());
    lo.push_back(threshold(box.sides[d].first));
    hi.push_back(threshold(box.sides[d].second));
  }
  BoxCountResult r;
  r.Q = Q;
  r.box = box;
  const bool empty = box.volume() == 0 && std::any_of(box.sides.begin(), box.sides.end(),
                                                      [](const auto& s) { return s.first == s.second; });
  if (!empty) {
    for (std::uint64_t q = 1; q <= Q; ++q) {
      bool in = true, unsure = false;
      for (std::size_t d = 0; d < dims && in; ++d) {
        const FixedAngle& x = orbits[d][q - 1];
        const Ordering a = lo[d].zero ? Ordering::greater : frac_cmp(x, exprs[d], q, lo[d]);
        const Ordering b = frac_cmp(x, exprs[d], q, hi[d]);
        if (a == Ordering::less || b == Ordering::greater || b == Ordering::equal) {
          in = false;
        } else if (a == Ordering::undecided || b == Ordering::undecided) {
          unsure = true;
        }
      }
      if (!in) continue;
      if (unsure) {
        ++r.undecided;
      } else {
        ++r.count;
      }
    }
  }
  r.error = mpq_class(mpz_class(static_cast<unsigned long>(r.count))) - mpq_class(mpz_class(static_cast<unsigned long>(Q))) * box.volume();
  return r;
}

Enclosure Discrepancy1D::star_count() const {
  const mpq_class n(mpz_class(static_cast<unsigned long>(Q)));
  return {star.lo * n, star.hi * n};
}

Enclosure Discrepancy1D::extreme_count() const {
  const mpq_class n(mpz_class(static_cast<unsigned long>(Q)));
  return {extreme.lo * n, extreme.hi * n};
}

Discrepancy1D star_discrepancy_1d(const RealParam& alpha, std::uint64_t Q, bool allow_literal) {
  if (Q == 0) throw DomainError("star_discrepancy_1d needs Q >= 1");
  require_irrational(alpha, allow_literal, "star_discrepancy_1d");
  const SortedOrbit s = sorted_orbit(alpha, Q);
  const long double n = static_cast<long double>(Q);
  long double star_lo = 0, star_hi = 0;
  long double max_lo = -2, max_hi = -2, min_lo = 2, min_hi = 2;
  for (std::uint64_t i = 1; i <= Q; ++i) {
    const Approx& x = s.x[i - 1];
    const auto [a, b] = abs_range(x - Approx::ratio(static_cast<long double>(2 * i - 1), 2 * n));
    star_lo = std::max(star_lo, a);
    star_hi = std::max(star_hi, b);
    const Approx g = Approx::ratio(static_cast<long double>(i), n) - x;
    max_lo = std::max(max_lo, g.lo());
    max_hi = std::max(max_hi, g.hi());
    min_lo = std::min(min_lo, g.lo());
    min_hi = std::min(min_hi, g.hi());
  }
  Discrepancy1D d;
  d.Q = Q;
  d.star = (Approx::ratio(1, 2 * n) + range_ball(star_lo, star_hi)).enclosure();
  d.extreme = (Approx::ratio(1, n) + range_ball(max_lo, max_hi) - range_ball(min_lo, min_hi)).enclosure();
  return d;
}

Grid2D disc2d_grid(const RealParam& alpha, const RealParam& beta, std::uint64_t Q, std::uint64_t m) {
  if (m == 0) throw DomainError("disc2d_grid needs m >= 1");
  if (m > 4096) throw DomainError("disc2d_grid supports m <= 4096");
  const RealParam* ps[2] = {&alpha, &beta};
  std::vector<std::uint32_t> cell[2];
  std::vector<bool> ok(Q, true);
  Grid2D g;
  g.Q = Q;
  g.m = m;
  for (int d = 0; d < 2; ++d) {
    const std::vector<FixedAngle> pts = orbit(*ps[d], Q);
    const RealExpr e = ps[d]->expr();
    cell[d].resize(Q);
    for (std::uint64_t i = 0; i < Q; ++i) {
      const FixedAngle& x = pts[i];
      std::int64_t k = static_cast<std::int64_t>(std::floor(x.frac01().v * static_cast<long double>(m)));
      k = std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(m) - 1);
      bool placed = false;
      for (int attempt = 0; attempt < 4 && !placed; ++attempt) {
        const Ordering a = k == 0 ? Ordering::greater : frac_cmp(x, e, i + 1, threshold(mpq_class(k, m)));
        const Ordering b = frac_cmp(x, e, i + 1, threshold(mpq_class(k + 1, m)));
        if (a == Ordering::less && k > 0) {
          --k;
        } else if ((b == Ordering::greater || b == Ordering::equal) && k + 1 < static_cast<std::int64_t>(m)) {
          ++k;
        } else if (a == Ordering::undecided || b == Ordering::undecided) {
          break;
        } else {
          placed = true;
        }
      }
      if (!placed) ok[i] = false;
      cell[d][i] = static_cast<std::uint32_t>(k);
    }
  }
  const std::size_t w = m + 1;
  std::vector<std::int64_t> P(w * w, 0);
  for (std::uint64_t i = 0; i < Q; ++i) {
    if (!ok[i]) {
      ++g.undecided;
      continue;
    }
    ++P[(cell[0][i] + 1) * w + (cell[1][i] + 1)];
  }
  for (std::size_t i = 1; i < w; ++i) {
    for (std::size_t j = 1; j < w; ++j) P[i * w + j] += P[(i - 1) * w + j] + P[i * w + j - 1] - P[(i - 1) * w + j - 1];
  }
  // E m^2 = m^2 S - Q (i2 - i1)(j2 - j1), exact in integers.
  const __int128 m2 = static_cast<__int128>(m) * m;
  __int128 best = 0;
  for (std::size_t i1 = 0; i1 < m; ++i1) {
    for (std::size_t i2 = i1 + 1; i2 <= m; ++i2) {
      for (std::size_t j1 = 0; j1 < m; ++j1) {
        for (std::size_t j2 = j1 + 1; j2 <= m; ++j2) {
          const std::int64_t S = P[i2 * w + j2] - P[i1 * w + j2] - P[i2 * w + j1] + P[i1 * w + j1];
          __int128 E = m2 * S - static_cast<__int128>(Q) * static_cast<__int128>((i2 - i1) * (j2 - j1));
          if (E < 0) E = -E;
          if (E > best) best = E;
        }
      }
    }
  }
  const mpz_class num = (mpz_class(static_cast<unsigned long>(best >> 64)) << 64) +
                        mpz_class(static_cast<unsigned long>(best & ~std::uint64_t(0)));
  g.lower = mpq_class(num, mpz_class(static_cast<unsigned long>(m)) * mpz_class(static_cast<unsigned long>(m)));
  g.lower.canonicalize();
  g.upper = g.lower + mpq_class(4 * mpz_class(static_cast<unsigned long>(Q)), mpz_class(static_cast<unsigned long>(m)));
  g.upper.canonicalize();
  return g;
}

std::vector<Approx> etk_frequency_sums(const std::vector<RealParam>& params, std::uint64_t H_max) {
  std::vector<Approx> shells = shell_sums(params, H_max);
  for (std::size_t i = 1; i < shells.size(); ++i) shells[i] = shells[i - 1] + shells[i];
  return shells;
}

Enclosure etk_from_sums(const std::vector<Approx>& sums, std::uint64_t N, std::uint64_t H) {
  if (H == 0 || H > sums.size()) throw DomainError("H out of range of the precomputed sums");
  return (Approx::ratio(9.0L * static_cast<long double>(N), static_cast<long double>(H)) + sums[H - 1]).enclosure();
}

EtkBound etk_bound(const std::vector<RealParam>& params, std::uint64_t N, std::uint64_t H) {
  if (N == 0 || H == 0) throw DomainError("etk_bound needs N, H >= 1");
  const std::vector<Approx> shells = shell_sums(params, H);
  EtkBound b;
  b.N = N;
  b.H = H;
  Approx total = Approx::ratio(9.0L * static_cast<long double>(N), static_cast<long double>(H));
  for (const Approx& s : shells) {
    b.terms.push_back(s.enclosure());
    total = total + s;
  }
  b.bound = total.enclosure();
  return b;
}

std::uint64_t etk_choose_H(std::uint64_t N, const mpq_class& sigma) {
  if (N == 0) throw DomainError("etk_choose_H needs N >= 1");
  if (!(sigma > 0)) throw DomainError("etk_choose_H needs sigma > 0");
  // f(H) = (8000 sigma / N) log2(H) H^(sigma+1) - 1 >= 0, increasing in H.
  auto satisfied = [&](std::uint64_t H) {
    if (H == 1) return false;
    const Ordering o = decide_sign([&](mpfr_prec_t p) {
      const Interval h(static_cast<long>(H), p);
      const Interval lh = log2(h);
      Interval c(mpq_class(8000 * sigma / mpq_class(mpz_class(static_cast<unsigned long>(N)))), p);
      c *= lh;
      c *= exp2(Interval(mpq_class(sigma + 1), p) * lh);
      c.add(-1);
      return c;
    });
    if (o == Ordering::undecided) throw CapExceeded("H selection undecided at the cap");
    return o != Ordering::less;
  };
  std::uint64_t hi = 2;
  while (!satisfied(hi)) hi *= 2;
  std::uint64_t lo = hi / 2;  // not satisfied (or 1)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (satisfied(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

EtkAuto etk_autoH(const RealParam& gamma, const RealParam& beta, std::uint64_t N, const mpq_class& sigma) {
  if (N < 2) throw DomainError("etk_autoH needs N >= 2");
  EtkAuto out;
  out.sigma = sigma;
  out.etk = etk_bound({gamma, beta}, N, etk_choose_H(N, sigma));
  constexpr mpfr_prec_t p = 128;
  const Interval n(static_cast<long>(N), p);
  const Interval s(sigma, p), s1(mpq_class(sigma + 1), p);
  const Interval denom = exp2(s / s1 * log2(n)) * exp2(log2(log2(n)) / s1);
  out.implied_C = Enclosure::from_interval(out.etk.bound.interval(p) / denom);
  return out;
}

}  // namespace mdl::disc
