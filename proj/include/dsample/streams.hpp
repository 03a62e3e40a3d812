#pragma once

// Bit-stream sources. Positions are 1-based; bit(i) is random access so the
// skip engine can jump ahead without touching the positions in between.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "dsample/hash.hpp"

namespace dsample {

template <class S>
concept BitSource = requires(const S& s, u64 i) {
  { s.size() } -> std::convertible_to<u64>;
  { s.bit(i) } -> std::convertible_to<bool>;
};

constexpr u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent bits with Pr[1] = gamma; bit i is a pure function of
/// (seed, i).
class GammaStream {
 public:
  GammaStream(u64 n, double gamma, u64 seed) : n_(n), gamma_(gamma), seed_(seed), key_(splitmix64(seed)) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
    if (gamma == 1.0) {
      all_ones_ = true;
    } else {
      threshold_ = static_cast<u64>(std::ldexp(gamma, 64));
    }
  }

  u64 size() const { return n_; }
  double gamma() const { return gamma_; }
  u64 seed() const { return seed_; }

  bool bit(u64 i) const {
    if (all_ones_) return true;
    return splitmix64(key_ ^ (i * 0xd1342543de82ef95ULL)) < threshold_;
  }

  bool at(u64 i) const {
    if (i == 0 || i > n_) throw std::out_of_range("stream position " + std::to_string(i) + " out of range");
    return bit(i);
  }

 private:
  u64 n_;
  double gamma_;
  u64 seed_;
  u64 key_;
  u64 threshold_ = 0;
  bool all_ones_ = false;
};

/// Packed bits, MSB-first within each byte; position 1 is the top bit of
/// byte 0.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(u64 n) : n_(n), bytes_((n + 7) / 8, 0) {}
  BitVector(std::vector<std::uint8_t> bytes, u64 n) : n_(n), bytes_(std::move(bytes)) {
    if (n > 8 * static_cast<u64>(bytes_.size())) {
      throw std::invalid_argument("bit length " + std::to_string(n) + " exceeds " +
                                  std::to_string(bytes_.size()) + " bytes");
    }
  }

  template <BitSource S>
  static BitVector from_source(const S& src) {
    BitVector out(src.size());
    for (u64 i = 1; i <= src.size(); ++i) {
      if (src.bit(i)) out.set(i);
    }
    return out;
  }

  u64 size() const { return n_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  bool bit(u64 i) const { return (bytes_[(i - 1) >> 3] >> (7 - ((i - 1) & 7))) & 1; }

  bool at(u64 i) const {
    if (i == 0 || i > n_) throw std::out_of_range("bit position " + std::to_string(i) + " out of range");
    return bit(i);
  }

  void set(u64 i, bool value = true) {
    if (i == 0 || i > n_) throw std::out_of_range("bit position " + std::to_string(i) + " out of range");
    const std::uint8_t mask = static_cast<std::uint8_t>(0x80u >> ((i - 1) & 7));
    if (value) {
      bytes_[(i - 1) >> 3] |= mask;
    } else {
      bytes_[(i - 1) >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  u64 n_ = 0;
  std::vector<std::uint8_t> bytes_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Loads a raw bit file. Without an explicit length the file holds
/// 8 * file_size bits.
inline BitVector read_bit_file(const std::filesystem::path& path, std::optional<u64> bits = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path, "read failed");
  const u64 n = bits.value_or(8 * static_cast<u64>(bytes.size()));
  if (n > 8 * static_cast<u64>(bytes.size())) {
    throw IoError(path, "holds " + std::to_string(8 * bytes.size()) + " bits, " + std::to_string(n) + " requested");
  }
  return BitVector(std::move(bytes), n);
}

template <BitSource S>
void write_bit_file(const std::filesystem::path& path, const S& src) {
  std::vector<std::uint8_t> bytes((src.size() + 7) / 8, 0);
  for (u64 i = 1; i <= src.size(); ++i) {
    if (src.bit(i)) bytes[(i - 1) >> 3] |= static_cast<std::uint8_t>(0x80u >> ((i - 1) & 7));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

template <BitSource S>
u64 popcount(const S& src) {
  u64 count = 0;
  for (u64 i = 1; i <= src.size(); ++i) count += src.bit(i) ? 1 : 0;
  return count;
}

template <class R>
concept BitSourceRange = std::ranges::forward_range<R> && BitSource<std::ranges::range_value_t<R>>;

/// Common length of the sources; throws if they differ.
template <BitSourceRange R>
u64 common_length(const R& sources) {
  if (std::ranges::empty(sources)) return 0;
  const u64 n = std::ranges::begin(sources)->size();
  for (const auto& s : sources) {
    if (s.size() != n) {
      throw std::invalid_argument("streams differ in length: " + std::to_string(s.size()) + " vs " +
                                  std::to_string(n));
    }
  }
  return n;
}

/// Number of positions where at least one stream has a 1-bit.
template <BitSourceRange R>
u64 popcount_or(const R& sources) {
  const u64 n = common_length(sources);
  u64 count = 0;
  for (u64 i = 1; i <= n; ++i) {
    for (const auto& s : sources) {
      if (s.bit(i)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

/// The bitwise OR of equal-length streams, materialized.
template <BitSourceRange R>
BitVector or_stream(const R& sources) {
  BitVector out(common_length(sources));
  for (u64 i = 1; i <= out.size(); ++i) {
    for (const auto& s : sources) {
      if (s.bit(i)) {
        out.set(i);
        break;
      }
    }
  }
  return out;
}

}  // namespace dsample
