#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdl/realnum.hpp"

namespace mdl::circle {

/// Closed representative [a, b] of an arc, 0 <= a < b <= 1.
struct Arc {
  mpq_class a;
  mpq_class b;
  friend bool operator==(const Arc&, const Arc&) = default;
};

/// Finite union of arcs of R/Z in canonical form: sorted, pairwise disjoint
/// (touching arcs merged), arcs through 0 split at 0. `slack` bounds the
/// measure of the symmetric difference with the exact set it represents.
class CircleSet {
 public:
  CircleSet() = default;
  static CircleSet full();
  /// Arc of the given radius around `center` (any real rational; reduced
  /// mod 1). A radius >= 1/2 gives the full circle.
  static CircleSet around(const mpq_class& center, const mpq_class& radius);
  /// Canonicalises arbitrary [a, b] pieces with a <= b (a, b any rationals;
  /// pieces longer than 1 cover the circle).
  static CircleSet from_pieces(std::vector<Arc> pieces, mpq_class slack = 0);

  const std::vector<Arc>& arcs() const { return arcs_; }
  bool empty() const { return arcs_.empty(); }
  mpq_class measure() const;
  const mpq_class& slack() const { return slack_; }
  /// Enclosure of the measure of the represented exact set.
  Enclosure measure_enclosure() const;
  bool contains(const mpq_class& x) const;

  friend CircleSet intersect(const CircleSet& s, const CircleSet& t);
  friend CircleSet unite(const CircleSet& s, const CircleSet& t);
  friend bool operator==(const CircleSet& s, const CircleSet& t) { return s.arcs_ == t.arcs_; }

  CircleSet canonical() const { return from_pieces(arcs_, slack_); }

 private:
  std::vector<Arc> arcs_;
  mpq_class slack_;
};

CircleSet intersect(const CircleSet& s, const CircleSet& t);
CircleSet unite(const CircleSet& s, const CircleSet& t);

nlohmann::json to_json(const CircleSet& s);
CircleSet circle_from_json(const nlohmann::json& j);

/// gamma mod 1 as a rational centre c in [0,1) and a radius: |gamma - c| <= delta mod 1.
struct Shift {
  mpq_class c;
  mpq_class delta;
  static Shift exact(const mpq_class& gamma);
  /// Dyadic centre on the 2^-bits grid, delta <= 2^-bits.
  static Shift of(const RealParam& gamma, long bits = 64);
};

/// A_q = { x : ||q x - gamma|| < psi_q }: q arcs of radius psi_q / q centred
/// at (gamma + j) / q. Throws DomainError unless 0 < psi_q < 1/2.
CircleSet build_Aq(const mpq_class& psi_q, const RealParam& gamma, std::uint64_t q);
CircleSet build_Aq(const mpq_class& psi_q, const Shift& gamma, std::uint64_t q);

/// Exact value computed from centres, with an absolute error bound.
struct Measured {
  mpq_class value;
  mpq_class err;
  Enclosure enclosure() const { return {value - err, value + err}; }
};

/// |A_q cap A_q'| in closed form, O(1) per pair. psi values are enclosures
/// (their midpoints are used, clamped to 1/2; the radius enters the error).
Measured pair_measure(const Enclosure& psi_q, const Enclosure& psi_qp, const Shift& gamma, std::uint64_t q,
                      std::uint64_t qp);

using PsiFn = std::function<mpq_class(std::uint64_t)>;
using PsiEncFn = std::function<Enclosure(std::uint64_t)>;

enum class BoundCase { I, II };
enum class Verdict { holds, fails, undecided };

const char* to_string(BoundCase c);
const char* to_string(Verdict v);

struct IntersectionReport {
  std::uint64_t q = 0, qp = 0;
  std::uint64_t gcd = 0;
  mpq_class delta;       ///< q psi(q') + q' psi(q)
  BoundCase bound_case = BoundCase::I;
  Ordering indicator_test = Ordering::undecided;  ///< ||k gamma|| against delta / gcd, k = (q'-q)/gcd
  int indicator = -1;    ///< 1, 0, or -1 when undecided
  Measured measure;
  mpq_class bound;
  Verdict verdict = Verdict::undecided;
  /// Case II: the smallest C0 with measure <= 4(1 + C0/(2H)) psi psi'.
  mpq_class required_C0;
};

/// Checks the intersection lemma for one pair q' < q. The endpoint shift
/// is refined (doubling bits up to the precision cap) until the verdict is
/// decided.
IntersectionReport master_check(const PsiFn& psi, const RealParam& gamma, std::uint64_t q, std::uint64_t qp,
                                std::uint64_t H, const mpq_class& C0);

nlohmann::json to_json(const IntersectionReport& r);

/// sum over 1 <= q' < q <= Q of |A_q cap A_q'|.
Measured pair_sum(const PsiEncFn& psi, const RealParam& gamma, std::uint64_t Q, unsigned threads = 0);
Measured pair_sum(const PsiEncFn& psi, const Shift& gamma, std::uint64_t Q, unsigned threads = 0);

}  // namespace mdl::circle
