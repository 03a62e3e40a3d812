#pragma once

// First index i >= 0 with (u + i*a) mod p <= L, found by recursing on the
// progression of round-start values, which lives in Z_a and has step a - r
// (r = p mod a). Each level at least halves the step, so the recursion depth
// is O(log a), and O(log d) when p is prime.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "dsample/hash.hpp"

namespace dsample {

struct ProgressionQuery {
  u64 modulus = 1;    // p > 0
  u64 step = 0;       // a, 0 <= a < p
  u64 start = 0;      // u, 0 <= u < p
  u64 threshold = 0;  // L >= 0
};

/// std::nullopt means no index of the progression ever lands at or below the
/// threshold.
using HitOffset = std::optional<u64>;

struct NextHitResult {
  HitOffset offset;
  unsigned depth = 0;  // number of nested recursive calls
};

inline void validate(const ProgressionQuery& q) {
  if (q.modulus == 0) throw std::invalid_argument("progression modulus must be positive");
  if (q.modulus >= (u64{1} << 63)) throw std::invalid_argument("progression modulus must be < 2^63");
  if (q.step >= q.modulus) throw std::invalid_argument("progression step must be < modulus");
  if (q.start >= q.modulus) throw std::invalid_argument("progression start must be < modulus");
}

namespace detail {

inline HitOffset next_hit_impl(u64 p, u64 a, u64 u, u64 L, unsigned level, unsigned& max_depth) {
  max_depth = std::max(max_depth, level);
  if (u <= L) return 0;
  if (a == 1) return p - u;
  if (a == 0) return std::nullopt;

  // Round 0 holds u, u+a, ... up to the first wrap past p; f1 starts round 1.
  const u64 span = p - u;
  const u64 first_round = span % a == 0 ? span / a : span / a + 1;
  const u64 f1 = u + first_round * a - p;  // u + |S0|*a lies in [p, p+a)
  const u64 r = p % a;

  // Index into the round starts f1, f2, ... (0-based), as a progression over
  // Z_a with step a - r. When a - r is the larger step, solve the mirrored
  // instance with step r instead: same answer, ((a - f1 + L) mod a) as start.
  HitOffset rounds;
  if (2 * (a - r) <= a) {
    rounds = next_hit_impl(a, a - r, f1, L, level + 1, max_depth);
  } else {
    const u64 mirrored = static_cast<u64>((static_cast<u128>(a) - f1 + L) % a);
    rounds = next_hit_impl(a, r, mirrored, L, level + 1, max_depth);
  }
  if (!rounds) return std::nullopt;

  const u64 m1 = *rounds;  // m - 1
  const u64 fm = static_cast<u64>((f1 + static_cast<u128>(a - r) * m1) % a);
  // d = (m*p - f0 + fm) / a with f0 = u.
  const u128 numerator = static_cast<u128>(m1) * p + fm + (p - u);
  if (numerator % a != 0) throw std::logic_error("next_hit reconstruction is not an exact division");
  return static_cast<u64>(numerator / a);
}

}  // namespace detail

inline NextHitResult next_hit_instrumented(const ProgressionQuery& q) {
  validate(q);
  NextHitResult result;
  result.offset = detail::next_hit_impl(q.modulus, q.step, q.start, q.threshold, 0, result.depth);
  return result;
}

inline HitOffset next_hit(const ProgressionQuery& q) { return next_hit_instrumented(q).offset; }

/// Linear scan over one full period of the progression.
inline HitOffset brute_next_hit(const ProgressionQuery& q) {
  validate(q);
  u64 value = q.start;
  for (u64 i = 0; i < q.modulus; ++i) {
    if (value <= q.threshold) return i;
    value += q.step;
    if (value >= q.modulus) value -= q.modulus;
  }
  return std::nullopt;
}

struct DirectSampleResult {
  std::optional<u64> position;
  unsigned depth = 0;
};

/// The first position y >= x with h(y) in R_level. Always found when p is
/// prime, since h then cycles through every residue.
inline DirectSampleResult direct_sample_instrumented(u64 x, unsigned level, const HashFn& h) {
  if (x == 0) throw std::invalid_argument("stream positions are 1-based");
  const ProgressionQuery q{h.p(), h.a(), h.eval(x), h.threshold(level) - 1};
  unsigned depth = 0;
  const HitOffset d = detail::next_hit_impl(q.modulus, q.step, q.start, q.threshold, 0, depth);
  if (!d) return {std::nullopt, depth};
  return {x + *d, depth};
}

inline std::optional<u64> direct_sample(u64 x, unsigned level, const HashFn& h) {
  return direct_sample_instrumented(x, level, h).position;
}

}  // namespace dsample
