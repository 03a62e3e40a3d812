#pragma once

// Sketch wire format, little-endian:
//
//   magic "DSK1" | version u8 = 1 | failed u8 | p u64 | a u64 | b u64 |
//   n_bound u64 | level u16 | count u32 | count x position u64
//
// Positions are strictly increasing. A failed sketch carries count = 0.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsample/hash.hpp"
#include "dsample/sketch.hpp"
#include "dsample/streams.hpp"

namespace dsample {

inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'D', 'S', 'K', '1'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 4 + 1 + 1 + 4 * 8 + 2 + 4;

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : std::runtime_error("sketch decode error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

class WireWriter {
 public:
  void put_bytes(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

  template <class T>
  void put(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class WireReader {
 public:
  explicit WireReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  template <class T>
  T get(const char* field) {
    need(sizeof(T), field);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{in_[pos_ + i]} << (8 * i));
    pos_ += sizeof(T);
    return value;
  }

  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw DecodeError(pos_, std::string("truncated input reading ") + field + " (need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const SketchSummary& s) {
  if (s.positions.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("sketch too large for the wire format");
  }
  detail::WireWriter w;
  w.put_bytes(kWireMagic);
  w.put<std::uint8_t>(kWireVersion);
  w.put<std::uint8_t>(s.failed ? 1 : 0);
  w.put<u64>(s.hash.p());
  w.put<u64>(s.hash.a());
  w.put<u64>(s.hash.b());
  w.put<u64>(s.hash.n_bound());
  w.put<std::uint16_t>(static_cast<std::uint16_t>(s.level));
  if (s.failed) {
    w.put<std::uint32_t>(0);
  } else {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.positions.size()));
    for (u64 x : s.positions) w.put<u64>(x);
  }
  return w.take();
}

inline std::vector<std::uint8_t> serialize(const Sketch& sk) { return serialize(sk.summary()); }

/// Parses and validates a sketch blob: hash invariants, level range, strictly
/// increasing positions that all survive at the stored level, no trailing
/// bytes.
inline SketchSummary deserialize(std::span<const std::uint8_t> bytes) {
  detail::WireReader r(bytes);
  r.need(kWireMagic.size(), "magic");
  if (!std::equal(kWireMagic.begin(), kWireMagic.end(), bytes.begin())) throw DecodeError(0, "bad magic");
  for (std::size_t i = 0; i < kWireMagic.size(); ++i) r.get<std::uint8_t>("magic");

  const std::size_t version_at = r.offset();
  if (r.get<std::uint8_t>("version") != kWireVersion) throw DecodeError(version_at, "unsupported version");
  const std::size_t failed_at = r.offset();
  const std::uint8_t failed = r.get<std::uint8_t>("failed flag");
  if (failed > 1) throw DecodeError(failed_at, "failed flag must be 0 or 1");

  const std::size_t hash_at = r.offset();
  const u64 p = r.get<u64>("p");
  const u64 a = r.get<u64>("a");
  const u64 b = r.get<u64>("b");
  const u64 n_bound = r.get<u64>("n_bound");
  auto hash = [&] {
    try {
      return HashFn(a, b, p, n_bound);
    } catch (const std::invalid_argument& e) {
      throw DecodeError(hash_at, e.what());
    }
  }();

  const std::size_t level_at = r.offset();
  const unsigned level = r.get<std::uint16_t>("level");
  if (!failed && level > hash.max_level()) throw DecodeError(level_at, "level exceeds max level");

  const std::size_t count_at = r.offset();
  const std::uint32_t count = r.get<std::uint32_t>("count");
  if (failed && count != 0) throw DecodeError(count_at, "failed sketch must carry no positions");
  r.need(static_cast<std::size_t>(count) * 8, "positions");

  SketchSummary out{hash, level, failed != 0, {}};
  out.positions.reserve(count);
  const u64 t = failed ? 0 : hash.threshold(level);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const u64 x = r.get<u64>("position");
    if (x == 0) throw DecodeError(at, "positions are 1-based");
    if (!out.positions.empty() && x <= out.positions.back()) {
      throw DecodeError(at, "positions not strictly increasing");
    }
    if (hash.eval(x) >= t) throw DecodeError(at, "position not sampleable at the stored level");
    out.positions.push_back(x);
  }
  if (r.remaining() != 0) throw DecodeError(r.offset(), "trailing bytes");
  return out;
}

inline void write_sketch_file(const std::filesystem::path& path, const SketchSummary& s) {
  const auto bytes = serialize(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

inline SketchSummary read_sketch_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace dsample
