#include "mdl/arith.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <mutex>
#include <numeric>

#include "mdl/errors.hpp"

namespace mdl::arith {

namespace {

using u128 = unsigned __int128;

std::atomic<std::uint32_t> g_limit{kDefaultSieveLimit};
std::once_flag g_once;
std::unique_ptr<Sieve> g_sieve;
std::atomic<bool> g_built{false};

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(u128(a) * b % m);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

std::uint64_t pollard_brent(std::uint64_t n) {
  if (n % 2 == 0) return 2;
  for (std::uint64_t c = 1;; ++c) {
    std::uint64_t y = 2, x = 2, g = 1, q = 1, ys = 2;
    const std::uint64_t m = 128;
    auto f = [&](std::uint64_t v) { return (mulmod(v, v, n) + c) % n; };
    for (std::uint64_t r = 1; g == 1; r <<= 1) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = f(y);
      for (std::uint64_t k = 0; k < r && g == 1; k += m) {
        ys = y;
        for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
          y = f(y);
          q = mulmod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
      }
    }
    if (g == n) {
      do {
        ys = f(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

void factor_into(std::uint64_t n, std::vector<std::uint64_t>& out) {
  if (n == 1) return;
  const Sieve& s = Sieve::instance();
  if (n <= s.limit()) {
    while (n > 1) {
      const std::uint32_t p = s.spf(static_cast<std::uint32_t>(n));
      out.push_back(p);
      n /= p;
    }
    return;
  }
  for (std::uint32_t p : {2u, 3u, 5u, 7u, 11u, 13u}) {
    while (n % p == 0) {
      out.push_back(p);
      n /= p;
    }
  }
  if (n == 1) return;
  if (n <= s.limit()) return factor_into(n, out);
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  const std::uint64_t d = pollard_brent(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

}  // namespace

Sieve::Sieve(std::uint32_t limit) : limit_(std::max<std::uint32_t>(limit, 16)), spf_(limit_ + 1, 0) {
  for (std::uint32_t i = 2; i <= limit_; ++i) {
    if (spf_[i] == 0) {
      spf_[i] = i;
      primes_.push_back(i);
    }
    for (std::uint32_t p : primes_) {
      const std::uint64_t m = std::uint64_t(p) * i;
      if (p > spf_[i] || m > limit_) break;
      spf_[m] = p;
    }
  }
}

const Sieve& Sieve::instance() {
  std::call_once(g_once, [] {
    g_sieve = std::make_unique<Sieve>(g_limit.load());
    g_built = true;
  });
  return *g_sieve;
}

void set_sieve_limit(std::uint32_t limit) {
  if (g_built) {
    if (limit == g_sieve->limit()) return;
    throw ConfigError("sieve limit must be set before the first factorization");
  }
  g_limit = limit;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  // These twelve bases are deterministic for all n < 2^64.
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

Factorization factorize(std::uint64_t n) {
  if (n == 0) throw DomainError("factorize(0)");
  std::vector<std::uint64_t> ps;
  factor_into(n, ps);
  std::sort(ps.begin(), ps.end());
  Factorization out;
  for (std::uint64_t p : ps) {
    if (!out.empty() && out.back().first == p) {
      ++out.back().second;
    } else {
      out.emplace_back(p, 1);
    }
  }
  return out;
}

std::vector<std::uint64_t> divisors(std::uint64_t q) {
  std::vector<std::uint64_t> out{1};
  for (const auto& [p, e] : factorize(q)) {
    const std::size_t n = out.size();
    std::uint64_t pk = 1;
    for (unsigned k = 1; k <= e; ++k) {
      pk *= p;
      for (std::size_t i = 0; i < n; ++i) out.push_back(out[i] * pk);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t divisor_count(std::uint64_t q) {
  std::uint64_t d = 1;
  for (const auto& pe : factorize(q)) d *= pe.second + 1;
  return d;
}

DivisorTable divisor_table(std::uint64_t q) {
  DivisorTable t;
  t.q = q;
  t.divisors = divisors(q);
  t.d = t.divisors.size();
  t.F = F_of(q);
  return t;
}

Interval F_interval(std::uint64_t q, mpfr_prec_t prec) {
  if (q == 0) throw DomainError("F(0) is undefined");
  // F(q) = sum_p w_p log2 p with w_p = sum_{r | q} v_p(r) / r, and by
  // multiplicativity w_p = (sum_j j / p^j) * prod_{p' != p} sigma_{-1}(p'^e').
  const Factorization f = factorize(q);
  std::vector<mpq_class> local_sigma, local_weight;
  for (const auto& [p, e] : f) {
    mpq_class s = 0, w = 0, pk = 1;
    for (unsigned j = 0; j <= e; ++j) {
      s += 1 / pk;
      w += mpq_class(j) / pk;
      pk *= mpz_class(static_cast<unsigned long>(p));
    }
    local_sigma.push_back(s);
    local_weight.push_back(w);
  }
  Interval total(0L, prec);
  for (std::size_t i = 0; i < f.size(); ++i) {
    mpq_class w = local_weight[i];
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j != i) w *= local_sigma[j];
    }
    total += Interval(w, prec) * Interval::log2_of(static_cast<unsigned long>(f[i].first), prec);
  }
  return total;
}

Enclosure F_of(std::uint64_t q) { return Enclosure::from_interval(F_interval(q, 96)).coarsened(64); }

Enclosure F_average(std::uint64_t Q) {
  if (Q == 0) throw DomainError("F_average needs Q >= 1");
  constexpr mpfr_prec_t prec = 96;
  Interval total(0L, prec);
  for (std::uint64_t r = 2; r <= Q; ++r) {
    Interval t = Interval::log2_of(static_cast<unsigned long>(r), prec);
    t.mul_si(static_cast<long>(Q / r));
    t.div_ui(static_cast<unsigned long>(r));
    total += t;
  }
  total.div_ui(static_cast<unsigned long>(Q));
  return Enclosure::from_interval(total).coarsened(64);
}

Enclosure F_sum_direct(std::uint64_t Q) {
  constexpr mpfr_prec_t prec = 96;
  Interval total(0L, prec);
  for (std::uint64_t q = 1; q <= Q; ++q) total += F_interval(q, prec);
  return Enclosure::from_interval(total);
}

}  // namespace mdl::arith
