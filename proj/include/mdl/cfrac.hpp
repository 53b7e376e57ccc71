#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "mdl/realnum.hpp"

namespace mdl::cfrac {

struct Convergent {
  mpz_class p;
  mpz_class q;
};

struct CFExpansion {
  std::vector<mpz_class> quotients;  ///< a0; a1, a2, ...
  std::vector<Convergent> convergents;
  bool terminated = false;  ///< the parameter is rational and fully expanded
};

/// a0 plus the next `terms` partial quotients, each certified by enclosure
/// separation. Throws CapExceeded when a quotient boundary cannot be decided.
CFExpansion expand(const RealParam& alpha, std::size_t terms);

/// Generates partial quotients of a real parameter one at a time.
class QuotientStream {
 public:
  explicit QuotientStream(const RealParam& alpha);
  /// Next partial quotient, or nothing once a rational input terminates.
  bool next(mpz_class& quotient);

 private:
  RealExpr alpha_;
  // Current tail x = (a*alpha + b) / (c*alpha + d).
  mpz_class a_ = 1, b_ = 0, c_ = 0, d_ = 1;
  mpq_class rational_;
  bool is_rational_;
  bool done_ = false;
};

struct MinDist {
  Enclosure value;      ///< ||argmin * alpha||
  std::uint64_t argmin;  ///< always a continued-fraction denominator
};

/// min over 1 <= n <= N of ||n alpha||, located through the convergents and
/// cross-checked against a direct scan when N <= kMinDistScanLimit.
MinDist min_dist(const RealParam& alpha, std::uint64_t N);
inline constexpr std::uint64_t kMinDistScanLimit = 1'000'000;

/// One row of a height-truncated Diophantine exponent table.
struct SigmaEntry {
  std::uint64_t N = 0;
  Enclosure sigma;
  std::int64_t k1 = 0;  ///< witness (for sigma_single: n, 0)
  std::int64_t k2 = 0;
};

struct DiophantineProfile {
  std::vector<SigmaEntry> entries;  ///< N = 2, 3, ..., ascending
  const SigmaEntry& at(std::uint64_t N) const { return entries.at(N - 2); }
};

/// sigma_gamma(N) = max_{2<=n<=N} -log2||n gamma|| / log2 n, with witness.
/// Throws IrrationalRequired for rational gamma (and decimal literals unless
/// allow_literal).
SigmaEntry sigma_single(const RealParam& gamma, std::uint64_t N, bool allow_literal = false);
DiophantineProfile sigma_profile_single(const RealParam& gamma, std::uint64_t N_max, bool allow_literal = false);

/// sigma_(gamma,beta)(N): max over (k1,k2) with max(|k1|,|k2|) in [2, N] of
/// -log2||k1 gamma + k2 beta|| / log2 max(|k1|,|k2|). Witnesses are sign
/// normalised (first nonzero entry positive); ties go to the
/// lexicographically smallest pair. Throws DependenceDetected when a form
/// evaluates exactly to an integer.
SigmaEntry sigma_pair(const RealParam& gamma, const RealParam& beta, std::uint64_t N, bool allow_literal = false);
DiophantineProfile sigma_profile_pair(const RealParam& gamma, const RealParam& beta, std::uint64_t N_max,
                                      bool allow_literal = false);
inline constexpr std::uint64_t kSigmaPairCap = 1000;

/// Exponent -log2||form|| / log2 height at working precision prec.
Interval exponent_interval(const RealExpr& form, std::uint64_t height, mpfr_prec_t prec);

enum class OmegaKind {
  triple_log,  ///< c / (log log log q)^(1/2), the schedule of the fibred theorem
  double_log,  ///< c / (log log q)^(1/2), the variant used for the second intersection lemma
};

/// 1 when log2 log2 q <= 1 (q <= 4), else the selected schedule.
Interval omega_schedule_interval(std::uint64_t q, const mpq_class& c, OmegaKind kind, mpfr_prec_t prec);
Enclosure omega_schedule(std::uint64_t q, const mpq_class& c, OmegaKind kind = OmegaKind::triple_log);

}  // namespace mdl::cfrac
