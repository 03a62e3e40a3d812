#pragma once

// beta = ceil(24 ln(1/delta)) independent instances, each with its own hash
// and one sketch per stream; the answer is the median instance estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dsample/hash.hpp"
#include "dsample/referee.hpp"
#include "dsample/sketch.hpp"
#include "dsample/streams.hpp"

namespace dsample {

enum class Engine { kScan, kSkip };

inline const char* engine_name(Engine e) { return e == Engine::kScan ? "scan" : "skip"; }

inline u64 instances_for(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
  return static_cast<u64>(std::ceil(24.0 * std::log(1.0 / delta)));
}

/// Seed of instance i, derived from the master seed by a counter-based mix so
/// any instance can be rebuilt on its own.
inline u64 instance_seed(u64 master_seed, u64 instance) {
  return splitmix64(splitmix64(master_seed) + instance);
}

inline HashFn instance_hash(u64 master_seed, u64 instance, u64 n_bound) {
  std::mt19937_64 rng(instance_seed(master_seed, instance));
  return new_hash(n_bound, rng);
}

/// Lower median; the input order is not preserved.
inline u64 median_lower(std::vector<u64> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

class EstimateUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InstanceDiagnostics {
  bool failed = false;
  unsigned level = 0;
  u64 union_size = 0;
  u64 value = 0;
};

struct EnsembleResult {
  Estimate estimate;
  std::vector<InstanceDiagnostics> instances;
};

/// Median over the instances that did not fail (nullopt). Throws
/// EstimateUnavailable when more than half failed.
inline EnsembleResult combine_instances(std::span<const std::optional<Estimate>> per_instance) {
  EnsembleResult result;
  result.instances.reserve(per_instance.size());
  std::vector<u64> values;
  u64 failed = 0;
  for (const auto& e : per_instance) {
    if (!e) {
      ++failed;
      result.instances.push_back({true, 0, 0, 0});
    } else {
      result.instances.push_back({false, e->level, e->union_size, e->value});
      values.push_back(e->value);
    }
  }
  if (per_instance.empty() || 2 * failed > per_instance.size()) {
    throw EstimateUnavailable("estimate unavailable: " + std::to_string(failed) + " of " +
                              std::to_string(per_instance.size()) + " instances failed");
  }
  const u64 median = median_lower(values);
  const auto chosen = std::find_if(per_instance.begin(), per_instance.end(),
                                   [&](const std::optional<Estimate>& e) { return e && e->value == median; });
  result.estimate = **chosen;
  result.estimate.instances_failed = failed;
  return result;
}

struct EnsembleConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  u64 n_bound = 1;
  std::size_t streams = 2;
  u64 seed = 0;
  std::optional<u64> capacity;  // overrides ceil(60 / eps^2)
  unsigned threads = 1;  // feed workers; 0 means one per hardware thread
};

class Ensemble {
 public:
  explicit Ensemble(const EnsembleConfig& config) : config_(config) {
    if (config.streams < 2) throw std::invalid_argument("an ensemble needs at least two streams");
    check_stream_bound(config.n_bound);
    const Capacity derived = capacity_for(config.epsilon);
    const Capacity capacity = config.capacity ? Capacity{*config.capacity} : derived;
    const u64 beta = instances_for(config.delta);
    instances_.reserve(beta);
    for (u64 i = 0; i < beta; ++i) {
      const HashFn h = instance_hash(config.seed, i, config.n_bound);
      std::vector<Sketch> per_stream;
      per_stream.reserve(config.streams);
      for (std::size_t s = 0; s < config.streams; ++s) per_stream.emplace_back(h, capacity);
      instances_.push_back(std::move(per_stream));
    }
    lengths_.resize(config.streams);
  }

  Ensemble(double epsilon, double delta, u64 n_bound, std::size_t streams, u64 seed)
      : Ensemble(EnsembleConfig{epsilon, delta, n_bound, streams, seed, std::nullopt, 1}) {}

  const EnsembleConfig& config() const { return config_; }
  std::size_t beta() const { return instances_.size(); }
  std::size_t streams() const { return config_.streams; }
  const HashFn& hash(std::size_t instance) const { return instances_.at(instance).front().hash(); }
  const Sketch& sketch(std::size_t instance, std::size_t stream) const { return instances_.at(instance).at(stream); }

  /// Runs every instance's sketch for `stream` over src.
  template <BitSource S>
  void feed(std::size_t stream, const S& src, Engine engine) {
    if (stream >= config_.streams) throw std::out_of_range("stream index " + std::to_string(stream) + " out of range");
    if (lengths_[stream]) throw std::logic_error("stream " + std::to_string(stream) + " was already fed");
    if (src.size() > config_.n_bound) {
      throw std::invalid_argument("stream length " + std::to_string(src.size()) + " exceeds bound " +
                                  std::to_string(config_.n_bound));
    }
    auto run = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        Sketch& sk = instances_[i][stream];
        if (engine == Engine::kScan) {
          sk.process_scan(src);
        } else {
          sk.process_skip(src);
        }
      }
    };
    const unsigned requested = config_.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config_.threads;
    const std::size_t workers = std::min<std::size_t>(requested, beta());
    if (workers <= 1) {
      run(0, beta());
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (beta() + workers - 1) / workers;
      for (std::size_t begin = 0; begin < beta(); begin += chunk) {
        pool.emplace_back(run, begin, std::min(beta(), begin + chunk));
      }
    }
    lengths_[stream] = src.size();
  }

  /// Read-only; may be called any number of times once every stream is fed.
  EnsembleResult query() const {
    for (std::size_t s = 0; s < config_.streams; ++s) {
      if (!lengths_[s]) throw std::logic_error("stream " + std::to_string(s) + " has not been fed");
      if (*lengths_[s] != *lengths_[0]) throw std::logic_error("streams were fed with different lengths");
    }
    std::vector<std::optional<Estimate>> per_instance;
    per_instance.reserve(beta());
    for (const auto& per_stream : instances_) {
      const bool any_failed = std::any_of(per_stream.begin(), per_stream.end(), [](const Sketch& s) { return s.failed(); });
      if (any_failed) {
        per_instance.emplace_back();
      } else {
        per_instance.push_back(merge(std::span<const Sketch>(per_stream)));
      }
    }
    return combine_instances(per_instance);
  }

  StreamStats stats() const {
    StreamStats total;
    for (const auto& per_stream : instances_) {
      for (const auto& sk : per_stream) total += sk.stats();
    }
    return total;
  }

 private:
  EnsembleConfig config_;
  std::vector<std::vector<Sketch>> instances_;  // [instance][stream]
  std::vector<std::optional<u64>> lengths_;
};

}  // namespace dsample
