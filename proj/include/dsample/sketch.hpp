#pragma once

// One processor's coordinated adaptive sample over a bit stream.
//
// Stored positions are bucketed by surviving level, so raising the sample
// level drops one whole bucket instead of rehashing every stored position.
// Two engines feed the same structure: process_scan reads every position,
// process_skip reads only the positions DirectSample says can be sampled at
// the current level. Given one hash they end in identical states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dsample/hash.hpp"
#include "dsample/nexthit.hpp"
#include "dsample/streams.hpp"

namespace dsample {

/// Sample capacity strong type.
struct Capacity {
  u64 value = 0;
};

/// ceil(60 / eps^2), the smallest capacity with alpha / 2 >= 30 / eps^2.
inline Capacity capacity_for(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0, 1)");
  const long double exact = 60.0L / (static_cast<long double>(epsilon) * epsilon);
  const long double nearest = std::round(exact);
  // 0.1 * 0.1 is not exactly 0.01; snap values that are integral up to
  // rounding noise before taking the ceiling.
  if (std::fabs(exact - nearest) <= 1e-9L * exact) return {static_cast<u64>(nearest)};
  return {static_cast<u64>(std::ceil(exact))};
}

struct StreamStats {
  u64 elements_examined = 0;
  u64 direct_sample_calls = 0;
  unsigned max_recursion_depth = 0;
  u64 level_ups = 0;
  u64 inserts = 0;

  StreamStats& operator+=(const StreamStats& o) {
    elements_examined += o.elements_examined;
    direct_sample_calls += o.direct_sample_calls;
    max_recursion_depth = std::max(max_recursion_depth, o.max_recursion_depth);
    level_ups += o.level_ups;
    inserts += o.inserts;
    return *this;
  }

  friend bool operator==(const StreamStats&, const StreamStats&) = default;
};

/// What a processor ships to the referee: hash, level and sample.
struct SketchSummary {
  HashFn hash;
  unsigned level = 0;
  bool failed = false;
  std::vector<u64> positions;  // strictly increasing

  friend bool operator==(const SketchSummary&, const SketchSummary&) = default;
};

class Sketch {
 public:
  Sketch(const HashFn& hash, double epsilon) : Sketch(hash, capacity_for(epsilon)) {}

  Sketch(const HashFn& hash, Capacity capacity)
      : hash_(hash), capacity_(capacity.value), buckets_(hash.max_level() + 1) {
    if (capacity_ == 0) throw std::invalid_argument("sketch capacity must be positive");
  }

  const HashFn& hash() const { return hash_; }
  unsigned level() const { return level_; }
  u64 capacity() const { return capacity_; }
  u64 size() const { return size_; }
  bool failed() const { return failed_; }
  bool fed() const { return fed_; }
  const StreamStats& stats() const { return stats_; }

  /// Stored positions whose surviving level is exactly `level`.
  const std::vector<u64>& bucket(unsigned level) const { return buckets_.at(level); }

  std::vector<u64> positions() const {
    std::vector<u64> out;
    out.reserve(size_);
    for (const auto& b : buckets_) out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  SketchSummary summary() const {
    if (failed_) return {hash_, level_, true, {}};
    return {hash_, level_, false, positions()};
  }

  /// Adds x (which must lie in R_level) and raises the level one step at a
  /// time until the sample fits again. Sets failed() if the level would pass
  /// max_level.
  void insert(u64 x) {
    if (failed_) throw std::logic_error("insert into a failed sketch");
    const unsigned survives = hash_.surviving_level(x);
    if (survives < level_) throw std::invalid_argument("position is not sampleable at the current level");
    buckets_[survives].push_back(x);
    ++size_;
    ++stats_.inserts;
    while (size_ > capacity_) {
      ++level_;
      ++stats_.level_ups;
      if (level_ > hash_.max_level()) {
        failed_ = true;
        return;
      }
      auto& dropped = buckets_[level_ - 1];
      size_ -= dropped.size();
      dropped.clear();
      dropped.shrink_to_fit();
    }
  }

  /// Baseline engine: reads every position, hashes each 1-bit.
  template <BitSource S>
  void process_scan(const S& src) {
    begin_feed();
    const u64 n = src.size();
    for (u64 i = 1; i <= n; ++i) {
      ++stats_.elements_examined;
      if (src.bit(i) && hash_.in_level(i, level_)) {
        insert(i);
        if (failed_) return;
      }
    }
  }

  /// Direct-sampling engine: after each examined position, jumps to the next
  /// position whose hash lies in R_level. Skipped positions are never read.
  template <BitSource S>
  void process_skip(const S& src) {
    begin_feed();
    const u64 n = src.size();
    u64 i = 1;  // DirectSample(1, 0) is always 1
    while (i <= n) {
      ++stats_.elements_examined;
      if (src.bit(i)) {
        insert(i);
        if (failed_) return;
      }
      const auto next = direct_sample_instrumented(i + 1, level_, hash_);
      ++stats_.direct_sample_calls;
      stats_.max_recursion_depth = std::max(stats_.max_recursion_depth, next.depth);
      if (!next.position) return;
      i = *next.position;
    }
  }

 private:
  void begin_feed() {
    if (failed_) throw std::logic_error("cannot feed a failed sketch");
    if (fed_) throw std::logic_error("sketch has already been fed a stream");
    fed_ = true;
  }

  HashFn hash_;
  u64 capacity_;
  unsigned level_ = 0;
  bool failed_ = false;
  bool fed_ = false;
  u64 size_ = 0;
  std::vector<std::vector<u64>> buckets_;
  StreamStats stats_;
};

/// Positions of the summary that survive at `level` (level >= summary level).
inline std::vector<u64> resample(const SketchSummary& s, unsigned level) {
  std::vector<u64> out;
  const u64 t = s.hash.threshold(level);
  for (u64 x : s.positions) {
    if (s.hash.eval(x) < t) out.push_back(x);
  }
  return out;
}

}  // namespace dsample
