#include "mdl/circlesets.hpp"

#include <algorithm>
#include <numeric>

#include "mdl/errors.hpp"
#include "mdl/parallel.hpp"

namespace mdl::circle {

namespace {

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

mpq_class frac01(const mpq_class& x) { return x - mpq_class(floor_q(x)); }

mpq_class clamp_psi(const mpq_class& p) {
  if (p < 0) return 0;
  if (p > mpq_class(1, 2)) return mpq_class(1, 2);
  return p;
}

nlohmann::json rational_json(const mpq_class& q) {
  auto part = [](const mpz_class& z) -> nlohmann::json {
    if (z.fits_slong_p()) return z.get_si();
    return z.get_str();
  };
  return nlohmann::json::array({part(q.get_num()), part(q.get_den())});
}

mpq_class rational_from_json(const nlohmann::json& j) {
  auto part = [](const nlohmann::json& v) {
    return v.is_string() ? mpz_class(v.get<std::string>()) : mpz_class(v.get<long>());
  };
  mpq_class q(part(j.at(0)), part(j.at(1)));
  q.canonicalize();
  return q;
}

// Number of m in Z with y + g m in the range, and the sum of those y + g m.
// Range ends are open or closed as flagged.
struct ProgressionSlice {
  mpz_class count;
  mpq_class sum_t;
};

ProgressionSlice slice(const mpq_class& y, const mpz_class& g, const mpq_class& A, bool closed_a, const mpq_class& B,
                       bool closed_b) {
  const mpq_class gq(g);
  const mpq_class la = (A - y) / gq, lb = (B - y) / gq;
  const mpz_class lo = closed_a ? ceil_q(la) : mpz_class(floor_q(la) + 1);
  const mpz_class hi = closed_b ? floor_q(lb) : mpz_class(ceil_q(lb) - 1);
  if (hi < lo) return {0, 0};
  const mpz_class n = hi - lo + 1;
  mpq_class half_sum((lo + hi) * n, 2);
  half_sum.canonicalize();
  return {n, mpq_class(n) * y + gq * half_sum};
}

}  // namespace

// ---------------------------------------------------------------- CircleSet

CircleSet CircleSet::full() {
  CircleSet s;
  s.arcs_.push_back({0, 1});
  return s;
}

CircleSet CircleSet::around(const mpq_class& center, const mpq_class& radius) {
  if (radius >= mpq_class(1, 2)) return full();
  if (radius <= 0) return {};
  return from_pieces({{center - radius, center + radius}});
}

CircleSet CircleSet::from_pieces(std::vector<Arc> pieces, mpq_class slack) {
  std::vector<Arc> flat;
  flat.reserve(pieces.size() + 1);
  for (Arc& p : pieces) {
    if (p.b - p.a >= 1) {
      CircleSet f = full();
      f.slack_ = slack;
      return f;
    }
    if (!(p.a < p.b)) continue;
    const mpz_class n = floor_q(p.a);
    if (n != 0) {
      p.a -= n;
      p.b -= n;
    }
    if (p.b <= 1) {
      flat.push_back(std::move(p));
    } else {
      flat.push_back({0, p.b - 1});
      flat.push_back({std::move(p.a), 1});
    }
  }
  std::sort(flat.begin(), flat.end(), [](const Arc& x, const Arc& y) { return x.a < y.a; });
  CircleSet out;
  out.slack_ = std::move(slack);
  for (Arc& p : flat) {
    if (!out.arcs_.empty() && p.a <= out.arcs_.back().b) {
      if (p.b > out.arcs_.back().b) out.arcs_.back().b = std::move(p.b);
    } else {
      out.arcs_.push_back(std::move(p));
    }
  }
  return out;
}

mpq_class CircleSet::measure() const {
  mpq_class m = 0;
  for (const Arc& a : arcs_) m += a.b - a.a;
  return m;
}

Enclosure CircleSet::measure_enclosure() const {
  const mpq_class m = measure();
  mpq_class lo = m - slack_, hi = m + slack_;
  if (lo < 0) lo = 0;
  if (hi > 1) hi = 1;
  return {lo, hi};
}

bool CircleSet::contains(const mpq_class& x) const {
  const mpq_class f = frac01(x);
  auto it = std::upper_bound(arcs_.begin(), arcs_.end(), f, [](const mpq_class& v, const Arc& a) { return v < a.a; });
  if (it != arcs_.begin() && f <= std::prev(it)->b) return true;
  // 0 and 1 are the same point
  return f == 0 && !arcs_.empty() && arcs_.back().b == 1;
}

CircleSet intersect(const CircleSet& s, const CircleSet& t) {
  std::vector<Arc> out;
  std::size_t i = 0, j = 0;
  while (i < s.arcs_.size() && j < t.arcs_.size()) {
    const Arc& x = s.arcs_[i];
    const Arc& y = t.arcs_[j];
    const mpq_class& lo = x.a < y.a ? y.a : x.a;
    const mpq_class& hi = x.b < y.b ? x.b : y.b;
    if (lo < hi) out.push_back({lo, hi});
    if (x.b < y.b) {
      ++i;
    } else {
      ++j;
    }
  }
  return CircleSet::from_pieces(std::move(out), s.slack_ + t.slack_);
}

CircleSet unite(const CircleSet& s, const CircleSet& t) {
  std::vector<Arc> all = s.arcs_;
  all.insert(all.end(), t.arcs_.begin(), t.arcs_.end());
  return CircleSet::from_pieces(std::move(all), s.slack_ + t.slack_);
}

nlohmann::json to_json(const CircleSet& s) {
  nlohmann::json arcs = nlohmann::json::array();
  for (const Arc& a : s.arcs()) arcs.push_back({rational_json(a.a), rational_json(a.b)});
  return {{"arcs", arcs}, {"slack", rational_json(s.slack())}};
}

CircleSet circle_from_json(const nlohmann::json& j) {
  std::vector<Arc> pieces;
  for (const auto& a : j.at("arcs")) pieces.push_back({rational_from_json(a.at(0)), rational_from_json(a.at(1))});
  mpq_class slack = j.contains("slack") ? rational_from_json(j.at("slack")) : mpq_class(0);
  return CircleSet::from_pieces(std::move(pieces), std::move(slack));
}

// -------------------------------------------------------------------- Shift

Shift Shift::exact(const mpq_class& gamma) { return {frac01(gamma), 0}; }

Shift Shift::of(const RealParam& gamma, long bits) {
  if (gamma.is_exact()) return exact(gamma.rational_value());
  const Enclosure e = eval(gamma.expr(), std::min(bits + 2, precision_cap()));
  const mpz_class scale = mpz_class(1) << (bits + 1);
  const mpq_class scaled = e.mid() * mpq_class(scale);
  mpq_class c(floor_q(scaled + mpq_class(1, 2)), scale);
  c.canonicalize();
  mpq_class delta = std::max(mpq_class(c - e.lo), mpq_class(e.hi - c));
  return {frac01(c), std::move(delta)};
}

CircleSet build_Aq(const mpq_class& psi_q, const Shift& gamma, std::uint64_t q) {
  if (q == 0) throw DomainError("build_Aq needs q >= 1");
  if (!(psi_q > 0 && psi_q < mpq_class(1, 2))) throw DomainError("psi(q) must lie in (0, 1/2)");
  const mpq_class qq(mpz_class(static_cast<unsigned long>(q)));
  const mpq_class r = psi_q / qq;
  std::vector<Arc> pieces;
  pieces.reserve(q);
  for (std::uint64_t j = 0; j < q; ++j) {
    const mpq_class center = (gamma.c + mpq_class(mpz_class(static_cast<unsigned long>(j)))) / qq;
    pieces.push_back({center - r, center + r});
  }
  // every arc moves by at most delta / q
  return CircleSet::from_pieces(std::move(pieces), 2 * gamma.delta);
}

CircleSet build_Aq(const mpq_class& psi_q, const RealParam& gamma, std::uint64_t q) {
  return build_Aq(psi_q, Shift::of(gamma), q);
}

// -------------------------------------------------------------- pair measure

Measured pair_measure(const Enclosure& psi_q, const Enclosure& psi_qp, const Shift& gamma, std::uint64_t q,
                      std::uint64_t qp) {
  if (q == 0 || qp == 0) throw DomainError("pair_measure needs q, q' >= 1");
  const mpz_class Z(static_cast<unsigned long>(q)), Zp(static_cast<unsigned long>(qp));
  const mpz_class g = gcd(Z, Zp);
  const mpq_class u(1, Z * Zp);
  const mpq_class pq = clamp_psi(psi_q.mid()), pqp = clamp_psi(psi_qp.mid());
  // |A_q cap A_q'| = g u sum_{m in Z} min(Delta - |y + g m|, h)_+
  const mpq_class a = pq * mpq_class(Zp), b = pqp * mpq_class(Z);
  const mpq_class delta = a + b;
  const mpq_class h = 2 * (a < b ? a : b);
  const mpq_class y = mpq_class(Zp - Z) * gamma.c;
  const mpq_class plateau = delta - h;

  const ProgressionSlice left = slice(y, g, -delta, true, -plateau, false);
  const ProgressionSlice mid = slice(y, g, -plateau, true, plateau, true);
  const ProgressionSlice right = slice(y, g, plateau, false, delta, true);
  const mpq_class S = mpq_class(left.count) * delta + left.sum_t + mpq_class(mid.count) * h +
                      mpq_class(right.count) * delta - right.sum_t;
  Measured out{mpq_class(g) * u * S, 0};

  const mpq_class dy = mpq_class(abs(Zp - Z)) * gamma.delta;
  const mpq_class dpsi = 3 * (mpq_class(Zp) * psi_q.radius() + mpq_class(Z) * psi_qp.radius());
  const mpq_class per_term = dy + dpsi;
  if (per_term > 0) {
    const mpq_class reach = delta + per_term;
    const ProgressionSlice active = slice(y, g, -reach, false, reach, false);
    out.err = mpq_class(g) * u * mpq_class(active.count) * per_term;
  }
  return out;
}

// ------------------------------------------------------------ master_check

const char* to_string(BoundCase c) { return c == BoundCase::I ? "I" : "II"; }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undecided: return "undecided";
  }
  return "?";
}

IntersectionReport master_check(const PsiFn& psi, const RealParam& gamma, std::uint64_t q, std::uint64_t qp,
                                std::uint64_t H, const mpq_class& C0) {
  if (qp > q) std::swap(q, qp);
  if (qp == 0 || q == qp) throw DomainError("master_check needs 1 <= q' < q");
  if (H < 3) throw DomainError("master_check needs H >= 3");
  if (!(C0 > 1)) throw DomainError("master_check needs C0 > 1");
  const mpq_class pq = psi(q), pqp = psi(qp);
  for (const mpq_class* p : {&pq, &pqp}) {
    if (!(*p > 0 && *p < mpq_class(1, 2))) throw DomainError("psi values must lie in (0, 1/2)");
  }
  const mpz_class Z(static_cast<unsigned long>(q)), Zp(static_cast<unsigned long>(qp));
  const mpz_class g = gcd(Z, Zp);
  const mpq_class Hq(mpz_class(static_cast<unsigned long>(H)));

  IntersectionReport r;
  r.q = q;
  r.qp = qp;
  r.gcd = g.get_ui();
  r.delta = mpq_class(Z) * pqp + mpq_class(Zp) * pq;
  r.bound_case = r.delta < Hq * mpq_class(g) ? BoundCase::I : BoundCase::II;

  const mpq_class radius = r.delta / mpq_class(g);
  if (radius >= mpq_class(1, 2)) {
    r.indicator_test = Ordering::less;
    r.indicator = 1;
  } else {
    const mpz_class k = (Zp - Z) / g;
    r.indicator_test = compare_dist(k * gamma.expr(), radius);
    r.indicator = r.indicator_test == Ordering::greater ? 0 : r.indicator_test == Ordering::undecided ? -1 : 1;
  }

  const mpq_class four_pp = 4 * pq * pqp;
  mpq_class bound_if_one;
  if (r.bound_case == BoundCase::I) {
    const mpq_class m1 = pq / mpq_class(Z), m2 = pqp / mpq_class(Zp);
    bound_if_one = 2 * (2 * Hq + 1) * (m1 < m2 ? m1 : m2) * mpq_class(g);
    r.bound = r.indicator == 0 ? mpq_class(0) : bound_if_one;
  } else {
    r.bound = 4 * (1 + C0 / (2 * Hq)) * pq * pqp;
  }

  for (long bits = 64;; bits *= 2) {
    const Shift s = Shift::of(gamma, bits);
    r.measure = pair_measure(Enclosure::exact(pq), Enclosure::exact(pqp), s, q, qp);
    const Enclosure m = r.measure.enclosure();
    if (r.bound_case == BoundCase::I && r.indicator == -1) {
      // Undecided indicator: only a zero measure is certain to satisfy both readings.
      r.verdict = m.hi <= 0 ? Verdict::holds : m.lo > bound_if_one ? Verdict::fails : Verdict::undecided;
    } else {
      r.verdict = m.hi <= r.bound ? Verdict::holds : m.lo > r.bound ? Verdict::fails : Verdict::undecided;
    }
    if (r.verdict != Verdict::undecided || s.delta == 0 || bits * 2 > precision_cap()) break;
  }
  r.required_C0 = 2 * Hq * (r.measure.enclosure().hi / four_pp - 1);
  return r;
}

nlohmann::json to_json(const IntersectionReport& r) {
  return {{"q", r.q},
          {"q_prime", r.qp},
          {"gcd", r.gcd},
          {"delta", rational_json(r.delta)},
          {"case", to_string(r.bound_case)},
          {"indicator", r.indicator},
          {"measure", rational_json(r.measure.value)},
          {"measure_err", rational_json(r.measure.err)},
          {"bound", rational_json(r.bound)},
          {"verdict", to_string(r.verdict)},
          {"required_C0", rational_json(r.required_C0)}};
}

// ------------------------------------------------------------------ pair_sum

Measured pair_sum(const PsiEncFn& psi, const Shift& gamma, std::uint64_t Q, unsigned threads) {
  if (Q < 2) throw DomainError("pair_sum needs Q >= 2");
  std::vector<Enclosure> values(Q + 1);
  for (std::uint64_t q = 1; q <= Q; ++q) values[q] = psi(q);
  std::vector<Measured> rows(Q + 1);
  parallel_for(Q - 1, threads, [&](std::size_t i) {
    const std::uint64_t q = i + 2;
    Measured acc{0, 0};
    for (std::uint64_t qp = 1; qp < q; ++qp) {
      const Measured m = pair_measure(values[q], values[qp], gamma, q, qp);
      acc.value += m.value;
      acc.err += m.err;
    }
    rows[q] = std::move(acc);
  });
  Measured total{0, 0};
  for (std::uint64_t q = 2; q <= Q; ++q) {
    total.value += rows[q].value;
    total.err += rows[q].err;
  }
  return total;
}

Measured pair_sum(const PsiEncFn& psi, const RealParam& gamma, std::uint64_t Q, unsigned threads) {
  return pair_sum(psi, Shift::of(gamma), Q, threads);
}

}  // namespace mdl::circle
