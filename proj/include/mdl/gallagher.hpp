#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdl/cfrac.hpp"
#include "mdl/circlesets.hpp"
#include "mdl/fast.hpp"
#include "mdl/realnum.hpp"

namespace mdl::gal {

enum class Family {
  constant,   ///< c
  inv,        ///< c / q
  invlog2,    ///< c / (q log2^2 q)
  gallagher,  ///< c / (q log2 q (log2 log2 q)^2)
  mono2,      ///< c / (q log2^2 q (log2 log2 q)^(1/2))
  table,      ///< explicit values for q = q0, q0+1, ...
};

const char* to_string(Family f);

/// Approximation function psi with 0 < psi(q) < 1/2 for q >= q0.
class ApproxFunction {
 public:
  static ApproxFunction make(Family f, const mpq_class& c);
  static ApproxFunction from_table(std::uint64_t q0, std::vector<mpq_class> values);
  /// `const:1/10`, `inv:1/4`, `invlog2:1/2`, `gallagher:1`, `mono2:1`,
  /// `table:1/10,1/20,...` (q0 = 1) or `table@5:...`.
  static ApproxFunction parse(std::string_view text);

  Family family() const { return family_; }
  const mpq_class& c() const { return c_; }
  std::uint64_t q0() const { return q0_; }
  /// Non-increasing in q on [q0, infinity) (tables: on their range).
  bool monotone() const;
  /// Largest q for which the function is defined (tables), else UINT64_MAX.
  std::uint64_t q_max() const;
  bool is_rational() const { return family_ == Family::constant || family_ == Family::inv || family_ == Family::table; }

  /// Exact value for rational families.
  mpq_class exact(std::uint64_t q) const;
  Interval interval(std::uint64_t q, mpfr_prec_t prec) const;
  /// Fast certified ball.
  Approx approx(std::uint64_t q) const;
  std::string to_string() const;

 private:
  Family family_ = Family::constant;
  mpq_class c_;
  std::uint64_t q0_ = 1;
  std::vector<mpq_class> table_;
  void check_domain(std::uint64_t q) const;
};

/// psi(q) as a rational enclosure. Throws DomainError below q0.
Enclosure psi_eval(const ApproxFunction& psi, std::uint64_t q);

struct OmegaSpec {
  enum class Kind { constant, schedule };
  Kind kind = Kind::constant;
  mpq_class value;  ///< the constant, or c of the schedule
  cfrac::OmegaKind schedule = cfrac::OmegaKind::triple_log;

  static OmegaSpec constant(const mpq_class& w) { return {Kind::constant, w, cfrac::OmegaKind::triple_log}; }
  static OmegaSpec of_schedule(const mpq_class& c, cfrac::OmegaKind k = cfrac::OmegaKind::triple_log) {
    return {Kind::schedule, c, k};
  }
  /// `1/4`, `sched:1/10` (triple log) or `sched2:1/10` (double log).
  static OmegaSpec parse(std::string_view text);
  Interval at(std::uint64_t q, mpfr_prec_t prec) const;
  std::string to_string() const;
};

struct Fibre {
  RealParam beta;
  RealParam gamma_prime;
  std::optional<OmegaSpec> omega;  ///< no omega: the untruncated product psi / ||q beta - gamma'||
};

/// psi'(q) = psi(q) / ||q beta - gamma'|| on the support
/// ||q beta - gamma'|| in [q^-omega(q), 1), and 0 elsewhere. Without a
/// fibre psi' = psi.
struct PsiPrime {
  ApproxFunction psi;
  std::optional<Fibre> fibre;
  std::string to_string() const;
};

enum class Status : std::uint8_t {
  support,     ///< psi'(q) > 0
  outside,     ///< certified outside the support
  undecided,   ///< the support test hit the precision cap
  degenerate,  ///< ||q beta - gamma'|| = 0 exactly
};

const char* to_string(Status s);

struct PsiPrimeValue {
  Enclosure value;  ///< 0 unless status == support
  Status status = Status::outside;
};

PsiPrimeValue psi_prime(const PsiPrime& pp, std::uint64_t q);

/// Per-q table of psi' for q0 <= q <= Q using the fast filters, with the
/// MPFR path for anything close to a support boundary.
struct PsiPrimeTable {
  std::uint64_t q0 = 1;
  std::uint64_t Q = 0;
  std::vector<Approx> value;  ///< index q - q0
  std::vector<Status> status;
  std::vector<Approx> psi;       ///< psi(q)
  std::vector<Approx> dist_beta; ///< ||q beta - gamma'|| (1 without a fibre)
  std::vector<mpq_class> exact;  ///< exact psi values (rational psi, no fibre)
  std::uint64_t undecided() const;
  std::uint64_t degenerate() const;
  Enclosure enclosure(std::uint64_t q) const;
};

PsiPrimeTable psi_prime_table(const PsiPrime& pp, std::uint64_t Q, unsigned threads = 0);

struct SumResult {
  Enclosure value;
  std::uint64_t undecided = 0;
  std::uint64_t degenerate = 0;
};

/// sum_{q0 <= q <= Q} psi'(q).
SumResult divergence_sum(const PsiPrime& pp, std::uint64_t Q);

struct Census {
  std::map<std::int64_t, std::vector<std::uint64_t>> cells;  ///< l -> members
  std::vector<std::uint64_t> undecided;
  std::vector<std::uint64_t> degenerate;
};

/// G^l = { q : ||q beta - gamma'|| in [2^l q^-omega, 2^(l+1) q^-omega) }, l >= 0, q <= Q.
Census gl_census(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega, std::uint64_t Q);

/// Cell index of one q: l >= 0, -1 outside the support; nullopt if undecided.
std::optional<std::int64_t> gl_cell(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega,
                                    std::uint64_t q);

struct SklrResult {
  std::uint64_t count = 0;
  std::uint64_t undecided = 0;
  std::vector<std::uint64_t> members;  ///< q' counted
};

/// S_{k,l,r}(q): q' < q with gcd(q', q) = r, q' in G^l, q' in [q/2^(k+1), q/2^k]
/// and ||gamma (q' - q)/r|| <= Delta(q', q)/r. Requires a fibre with omega.
SklrResult sklr_sum(const PsiPrime& pp, const RealParam& gamma, std::uint64_t q, std::uint64_t k, std::int64_t l,
                    std::uint64_t r);

struct FMoment {
  Enclosure sum;        ///< sum of F(q)^K over G^l cap [Q/2, Q]
  Enclosure reference;  ///< Q^(1-omega) 2^(l+1)
  std::uint64_t members = 0;
  std::uint64_t undecided = 0;
};

FMoment f_moment_sum(const RealParam& beta, const RealParam& gamma_prime, const OmegaSpec& omega, std::uint64_t Q,
                     std::int64_t l, unsigned K);

struct BCEntry {
  std::uint64_t Q = 0;
  circle::Measured measure_sum;  ///< sum |A_q|
  circle::Measured pair_sum;     ///< sum_{q' < q} |A_q cap A_q'|
  mpq_class ratio;               ///< from the centre values
  Enclosure ratio_enclosure;
};

struct BCSeries {
  std::vector<BCEntry> entries;  ///< from the first Q with some nonempty A_q up to Q_max
  std::uint64_t undecided = 0;
  const BCEntry& back() const { return entries.back(); }
};

/// (sum |A_q|)^2 / sum_{q, q' <= Q} |A_q cap A_q'| with the diagonal included.
/// Throws DomainError when every psi'(q), q <= Q, vanishes.
BCSeries bc_ratio(const PsiPrime& pp, const RealParam& gamma, std::uint64_t Q, unsigned threads = 0);

struct UnionSeries {
  std::uint64_t Q0 = 0;
  std::vector<circle::Measured> measures;  ///< |union_{q=Q0}^{Q0+i} A_q|
  std::uint64_t undecided = 0;
};

UnionSeries union_series(const PsiPrime& pp, const RealParam& gamma, std::uint64_t Q0, std::uint64_t Q);

struct HitCount {
  std::uint64_t count = 0;
  std::uint64_t undecided = 0;
  std::uint64_t degenerate = 0;
};

/// #{q <= Q : ||q x - gamma|| ||q beta - gamma'|| < psi(q)}. With an omega
/// the test is restricted to the support of psi'. Without a fibre the test
/// is ||q x - gamma|| < psi(q). q below q0 is skipped.
HitCount hit_count(const RealParam& x, const RealParam& gamma, const PsiPrime& pp, std::uint64_t Q);

struct MCResult {
  std::uint64_t samples = 0;
  mpq_class mean;       ///< total hits / samples
  Enclosure expected;   ///< sum min(1, 2 psi'(q))
  Enclosure deviation;  ///< mean - expected
  std::uint64_t undecided = 0;
  std::vector<std::uint64_t> counts;
};

/// x = X / 2^64 with X drawn from a generator keyed by (seed, sample index).
std::uint64_t sample_u64(std::uint64_t seed, std::uint64_t index);

MCResult mc_survey(const RealParam& gamma, const PsiPrime& pp, std::uint64_t Q, std::uint64_t samples,
                   std::uint64_t seed, unsigned threads = 0);

struct DMSample {
  bool failed = false;
  std::int64_t k1 = 0, k2 = 0;  ///< failing pair, or the worst pair when none fails
  Enclosure exponent;           ///< -log2||k1 gamma + k2 beta|| / log2 max(|k1|,|k2|) of the witness
  bool dependent = false;       ///< an exact integer relation was found
  bool undecided = false;       ///< some threshold test hit the precision cap
};

/// Looks for (k1, k2), k1 k2 != 0, 2 <= max(|k1|,|k2|) <= N, with
/// ||k1 gamma + k2 beta|| <= max^-H'. Exact relations fail at any height.
DMSample doubly_metric_check(const RealParam& gamma, const RealParam& beta, const mpq_class& H_prime,
                             std::uint64_t N);

struct DMResult {
  std::uint64_t samples = 0;
  std::uint64_t failures = 0;
  mpq_class fraction;
  std::vector<DMSample> per_sample;
  mpq_class union_bound;  ///< sum_{k=2}^N 4 k^(1 - H'), exact when H' is an integer
  Enclosure union_bound_enclosure;
};

DMResult doubly_metric_sample(const RealParam& gamma, const mpq_class& H_prime, std::uint64_t N,
                              std::uint64_t samples, std::uint64_t seed, unsigned threads = 0);

}  // namespace mdl::gal
