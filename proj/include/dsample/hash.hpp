#pragma once

// Pairwise-independent hash h(x) = (a*x + b) mod p over stream positions,
// with p a random prime in [10n, 20n], and the nested level ranges
// R_l = {0, ..., floor(p / 2^l) - 1} used for adaptive sampling.

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dsample {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Keeps 20 * n below 2^63 so every modulus, residue and position sum fits in
// a signed-safe 64-bit range and NextHit's p^2 intermediates fit in 128 bits.
inline constexpr u64 kMaxStreamBound = u64{1} << 58;

namespace detail {

constexpr u64 mulmod(u64 x, u64 y, u64 m) {
  return static_cast<u64>(static_cast<u128>(x) * y % m);
}

constexpr u64 powmod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

// Deterministic Miller-Rabin; the first twelve prime bases are exact for all
// 64-bit inputs.
constexpr bool is_prime(u64 n) {
  if (n < 2) return false;
  constexpr u64 bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (u64 q : bases) {
    if (n % q == 0) return n == q;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 q : bases) {
    u64 x = detail::powmod(q, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = detail::mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline void check_stream_bound(u64 n_bound) {
  if (n_bound == 0 || n_bound > kMaxStreamBound) {
    throw std::invalid_argument("stream bound must be in [1, 2^58], got " +
                                std::to_string(n_bound));
  }
}

/// Draws a prime uniformly from the primes in [10 * n_bound, 20 * n_bound] by
/// rejection sampling uniform integers from the interval.
template <class Rng>
u64 sample_prime(u64 n_bound, Rng& rng) {
  check_stream_bound(n_bound);
  std::uniform_int_distribution<u64> dist(10 * n_bound, 20 * n_bound);
  for (;;) {
    u64 candidate = dist(rng);
    if (is_prime(candidate)) return candidate;
  }
}

/// floor(log2 p): the highest level whose range R_l is still nonempty.
constexpr unsigned max_level_for(u64 p) {
  return static_cast<unsigned>(std::bit_width(p)) - 1;
}

/// |R_l| = floor(p / 2^l).
inline u64 level_threshold(u64 p, unsigned level) {
  if (p == 0 || level > max_level_for(p)) {
    throw std::out_of_range("level " + std::to_string(level) +
                            " exceeds max level for p=" + std::to_string(p));
  }
  return p >> level;
}

/// Largest level l <= floor(log2 p) with value < floor(p / 2^l).
constexpr unsigned surviving_level_for(u64 p, u64 value) {
  const unsigned top = max_level_for(p);
  unsigned level = 0;
  while (level < top && value < (p >> (level + 1))) ++level;
  return level;
}

/// (a * x + b) mod p with a 128-bit product.
constexpr u64 affine_mod(u64 a, u64 b, u64 p, u64 x) {
  return static_cast<u64>((static_cast<u128>(a) * x + b) % p);
}

/// An exact fraction num / den.
struct Rational {
  u64 num = 0;
  u64 den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// P_l = floor(p / 2^l) / p, not reduced.
inline Rational sample_prob(u64 p, unsigned level) {
  return {level_threshold(p, level), p};
}

/// count / P_l rounded half up, i.e. (count * p + t/2) / t with t = |R_l|.
inline u64 scale_count(u64 count, u64 p, unsigned level) {
  const u64 t = level_threshold(p, level);
  return static_cast<u64>((static_cast<u128>(count) * p + t / 2) / t);
}

class HashFn {
 public:
  /// Validates every invariant: p prime with 10n <= p <= 20n, 1 <= a < p,
  /// 0 <= b < p.
  HashFn(u64 a, u64 b, u64 p, u64 n_bound) : a_(a), b_(b), p_(p), n_bound_(n_bound) {
    check_stream_bound(n_bound);
    if (!is_prime(p)) throw std::invalid_argument("hash modulus " + std::to_string(p) + " is not prime");
    if (p < 10 * n_bound || p > 20 * n_bound) {
      throw std::invalid_argument("hash modulus " + std::to_string(p) + " outside [10n, 20n] for n=" +
                                  std::to_string(n_bound));
    }
    if (a == 0 || a >= p) throw std::invalid_argument("hash multiplier must be in [1, p)");
    if (b >= p) throw std::invalid_argument("hash offset must be in [0, p)");
    narrow_ = p < (u64{1} << 32);
  }

  u64 a() const { return a_; }
  u64 b() const { return b_; }
  u64 p() const { return p_; }
  u64 n_bound() const { return n_bound_; }
  unsigned max_level() const { return max_level_for(p_); }

  u64 operator()(u64 x) const { return eval(x); }

  u64 eval(u64 x) const {
    // a, b < 2^32 and x < 2^32 keep a*x + b below 2^64.
    if (narrow_ && x < (u64{1} << 32)) return (a_ * x + b_) % p_;
    return affine_mod(a_, b_, p_, x);
  }

  u64 threshold(unsigned level) const { return level_threshold(p_, level); }

  bool in_level(u64 x, unsigned level) const { return eval(x) < threshold(level); }

  /// Largest level l <= max_level with h(x) in R_l.
  unsigned surviving_level(u64 x) const { return surviving_level_of_value(eval(x)); }

  unsigned surviving_level_of_value(u64 hv) const { return surviving_level_for(p_, hv); }

  Rational sample_prob(unsigned level) const { return dsample::sample_prob(p_, level); }

  friend bool operator==(const HashFn& x, const HashFn& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && x.p_ == y.p_ && x.n_bound_ == y.n_bound_;
  }

 private:
  u64 a_;
  u64 b_;
  u64 p_;
  u64 n_bound_;
  bool narrow_ = false;
};

/// Draws (a, b) for a fixed prime p, a != 0.
template <class Rng>
HashFn draw_hash(u64 p, u64 n_bound, Rng& rng) {
  std::uniform_int_distribution<u64> mult(1, p - 1);
  std::uniform_int_distribution<u64> offset(0, p - 1);
  const u64 a = mult(rng);
  const u64 b = offset(rng);
  return HashFn(a, b, p, n_bound);
}

template <class Rng>
HashFn new_hash(u64 n_bound, Rng& rng) {
  const u64 p = sample_prime(n_bound, rng);
  return draw_hash(p, n_bound, rng);
}

}  // namespace dsample
