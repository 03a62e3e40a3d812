#pragma once

// Query-time merge of k sketches that share one hash: lift every sample to
// the highest level l*, union the surviving positions, scale by 1 / P_{l*}.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsample/hash.hpp"
#include "dsample/sketch.hpp"
#include "dsample/streams.hpp"

namespace dsample {

struct Estimate {
  u64 value = 0;
  unsigned level = 0;  // l*
  u64 union_size = 0;
  u64 instances_failed = 0;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

class MergeError : public std::runtime_error {
 public:
  enum class Kind { kTooFewSketches, kHashMismatch, kFailedSketch };

  MergeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Sorted union of every summary's positions that survive at `level`.
inline std::vector<u64> merged_positions(std::span<const SketchSummary> sketches, unsigned level) {
  std::vector<u64> out;
  for (const auto& s : sketches) {
    const auto kept = resample(s, level);
    std::vector<u64> merged;
    merged.reserve(out.size() + kept.size());
    std::set_union(out.begin(), out.end(), kept.begin(), kept.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

inline Estimate merge(std::span<const SketchSummary> sketches) {
  if (sketches.size() < 2) {
    throw MergeError(MergeError::Kind::kTooFewSketches, "merge needs at least two sketches");
  }
  const HashFn& hash = sketches.front().hash;
  unsigned top = 0;
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    if (!(sketches[i].hash == hash)) {
      throw MergeError(MergeError::Kind::kHashMismatch, "sketch " + std::to_string(i) + " uses a different hash");
    }
    if (sketches[i].failed) {
      throw MergeError(MergeError::Kind::kFailedSketch, "sketch " + std::to_string(i) + " overflowed its max level");
    }
    top = std::max(top, sketches[i].level);
  }
  const u64 union_size = merged_positions(sketches, top).size();
  return {scale_count(union_size, hash.p(), top), top, union_size, 0};
}

inline Estimate merge(std::span<const Sketch> sketches) {
  std::vector<SketchSummary> summaries;
  summaries.reserve(sketches.size());
  for (const auto& s : sketches) summaries.push_back(s.summary());
  return merge(std::span<const SketchSummary>(summaries));
}

/// Ground-truth U: positions set in at least one stream.
template <BitSourceRange R>
u64 exact_union_count(const R& streams) {
  return popcount_or(streams);
}

}  // namespace dsample
