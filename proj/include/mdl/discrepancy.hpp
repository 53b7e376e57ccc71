#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "mdl/fast.hpp"
#include "mdl/realnum.hpp"

namespace mdl::disc {

/// Product of half-open intervals [a, b) with 0 <= a <= b <= 1, one per axis.
struct Box {
  std::vector<std::pair<mpq_class, mpq_class>> sides;
  mpq_class volume() const;
};

struct BoxCountResult {
  std::uint64_t Q = 0;
  Box box;
  std::uint64_t count = 0;  ///< S_I
  mpq_class error;          ///< E = S_I - Q |I|
  std::uint64_t undecided = 0;
};

/// Counts 1 <= q <= Q with ({q a_1}, ..., {q a_k}) in the box, k in {1, 2}.
/// Memberships that stay undecided at the precision cap are not counted
/// and are reported in `undecided`.
BoxCountResult box_count(const std::vector<RealParam>& params, std::uint64_t Q, const Box& box);

/// Points {q alpha} for q = 1..Q as certified 128-bit angles, carried
/// incrementally along the orbit.
std::vector<FixedAngle> orbit(const RealParam& alpha, std::uint64_t Q);

struct Discrepancy1D {
  std::uint64_t Q = 0;
  Enclosure star;     ///< D*_Q = 1/(2Q) + max_i |x_(i) - (2i-1)/(2Q)|
  Enclosure extreme;  ///< D_Q over all intervals = 1/Q + max(i/Q - x_(i)) - min(i/Q - x_(i))
  Enclosure star_count() const;     ///< Q D*_Q
  Enclosure extreme_count() const;  ///< Q D_Q
};

/// Exact (certified) anchored and all-interval discrepancy of {q alpha},
/// q <= Q. Throws IrrationalRequired for rationals, and for decimal
/// literals unless allow_literal.
Discrepancy1D star_discrepancy_1d(const RealParam& alpha, std::uint64_t Q, bool allow_literal = false);

struct Grid2D {
  std::uint64_t Q = 0;
  std::uint64_t m = 0;
  mpq_class lower;  ///< max |E| over grid-aligned boxes
  mpq_class upper;  ///< lower + 4Q/m
  std::uint64_t undecided = 0;
};

Grid2D disc2d_grid(const RealParam& alpha, const RealParam& beta, std::uint64_t Q, std::uint64_t m);

struct EtkBound {
  std::uint64_t N = 0;
  std::uint64_t H = 0;
  Enclosure bound;
  /// terms[k-1]: contribution of frequencies of height k (both signs /
  /// all pairs of that height), already multiplied by 9N.
  std::vector<Enclosure> terms;
};

/// Erdos-Turan-Koksma bound. 1D: 9N(1/H + sum_{0<|k|<=H} (2/(|k|+1)) (2/(N||k a||))).
/// 2D: 9N(1/H + sum' 4/((|k1|+1)(|k2|+1)) * 2/(N||k1 a + k2 b||)).
/// Throws DependenceDetected if some ||.|| is exactly 0.
EtkBound etk_bound(const std::vector<RealParam>& params, std::uint64_t N, std::uint64_t H);

/// The frequency sums (without the 9N/H term) for every H = 1..H_max:
/// sums[H-1] = 9 sum_{height <= H} ..., so bound(N, H) = 9N/H + sums[H-1].
std::vector<Approx> etk_frequency_sums(const std::vector<RealParam>& params, std::uint64_t H_max);
Enclosure etk_from_sums(const std::vector<Approx>& sums, std::uint64_t N, std::uint64_t H);

struct EtkAuto {
  EtkBound etk;
  mpq_class sigma;
  /// bound / (N^(s/(s+1)) (log2 N)^(1/(s+1))), for N >= 2.
  Enclosure implied_C;
};

/// Smallest H >= 1 with 1/H <= (8000 sigma / N) log2(H) H^sigma.
std::uint64_t etk_choose_H(std::uint64_t N, const mpq_class& sigma);
EtkAuto etk_autoH(const RealParam& gamma, const RealParam& beta, std::uint64_t N, const mpq_class& sigma);

}  // namespace mdl::disc
