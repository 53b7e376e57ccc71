#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "mdl/interval.hpp"
#include "mdl/realnum.hpp"

namespace mdl::arith {

using Factorization = std::vector<std::pair<std::uint64_t, unsigned>>;  // (prime, exponent), ascending

/// Smallest-prime-factor table, built once on first use.
class Sieve {
 public:
  explicit Sieve(std::uint32_t limit);
  std::uint32_t limit() const { return limit_; }
  /// n <= limit.
  std::uint32_t spf(std::uint32_t n) const { return spf_[n]; }
  const std::vector<std::uint32_t>& primes() const { return primes_; }

  static const Sieve& instance();

 private:
  std::uint32_t limit_;
  std::vector<std::uint32_t> spf_;
  std::vector<std::uint32_t> primes_;
};

inline constexpr std::uint32_t kDefaultSieveLimit = 10'000'000;
/// Must be called before the first factorization; throws ConfigError after.
void set_sieve_limit(std::uint32_t limit);

bool is_prime(std::uint64_t n);
/// Sieve lookup below the limit, Pollard-Brent above it.
Factorization factorize(std::uint64_t n);

std::vector<std::uint64_t> divisors(std::uint64_t q);
std::uint64_t divisor_count(std::uint64_t q);

struct DivisorTable {
  std::uint64_t q = 0;
  std::vector<std::uint64_t> divisors;  ///< ascending
  std::uint64_t d = 0;
  Enclosure F;
};

DivisorTable divisor_table(std::uint64_t q);

/// F(q) = sum_{r | q} log2(r) / r.
Interval F_interval(std::uint64_t q, mpfr_prec_t prec);
/// Enclosure of F(q) of width <= 2^-32 (exact when q is a power of two).
Enclosure F_of(std::uint64_t q);
/// (1/Q) sum_{q <= Q} F(q) by the divisor-swap identity.
Enclosure F_average(std::uint64_t Q);
/// sum_{q <= Q} F(q) by direct per-q summation (reference route, O(Q log Q)).
Enclosure F_sum_direct(std::uint64_t Q);

}  // namespace mdl::arith
