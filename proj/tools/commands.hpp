#pragma once

// Subcommand implementations for the dsample CLI. Each returns a process exit
// code; main.cpp only parses flags.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

#include "dsample/dsample.hpp"

namespace dsample::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitUnavailable = 3;
inline constexpr int kExitIo = 4;

inline constexpr const char* kCsvHeader =
    "engine,n,k,gamma,epsilon,delta,seed,estimate,exact,rel_err,wall_s,examined,ds_calls,max_depth,peak_kb";

struct RunReport {
  std::string engine;
  u64 n = 0;
  u64 k = 0;
  std::string gamma;  // generator probability, or "file"
  double epsilon = 0;
  double delta = 0;
  u64 seed = 0;
  u64 estimate = 0;
  u64 exact = 0;
  double rel_err = 0;
  double wall_s = 0;
  u64 examined = 0;
  u64 ds_calls = 0;
  unsigned max_depth = 0;
  std::string peak_kb = "n/a";

  std::string to_csv() const {
    std::ostringstream out;
    out << std::setprecision(12);
    out << engine << ',' << n << ',' << k << ',' << gamma << ',' << epsilon << ',' << delta << ',' << seed << ','
        << estimate << ',' << exact << ',' << rel_err << ',' << wall_s << ',' << examined << ',' << ds_calls << ','
        << max_depth << ',' << peak_kb;
    return out.str();
  }

  static RunReport from_csv(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw std::invalid_argument("expected 15 CSV fields, got " + std::to_string(f.size()));
    RunReport r;
    r.engine = f[0];
    r.n = std::stoull(f[1]);
    r.k = std::stoull(f[2]);
    r.gamma = f[3];
    r.epsilon = std::stod(f[4]);
    r.delta = std::stod(f[5]);
    r.seed = std::stoull(f[6]);
    r.estimate = std::stoull(f[7]);
    r.exact = std::stoull(f[8]);
    r.rel_err = f[9] == "inf" ? INFINITY : std::stod(f[9]);
    r.wall_s = std::stod(f[10]);
    r.examined = std::stoull(f[11]);
    r.ds_calls = std::stoull(f[12]);
    r.max_depth = static_cast<unsigned>(std::stoul(f[13]));
    r.peak_kb = f[14];
    return r;
  }
};

inline double relative_error(u64 estimate, u64 exact) {
  if (exact == 0) return estimate == 0 ? 0.0 : INFINITY;
  return std::fabs(static_cast<double>(estimate) - static_cast<double>(exact)) / static_cast<double>(exact);
}

inline std::string peak_rss_kb() {
#if defined(__linux__)
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) == 0) return std::to_string(usage.ru_maxrss);
#endif
  return "n/a";
}

inline std::optional<Engine> parse_engine(const std::string& name) {
  if (name == "scan") return Engine::kScan;
  if (name == "skip") return Engine::kSkip;
  return std::nullopt;
}

/// Appends rows to `csv_path` (writing the header when the file is new or
/// empty), or prints header and rows to `out` when no path is given.
class CsvSink {
 public:
  CsvSink(const std::optional<std::filesystem::path>& csv_path, std::ostream& out) : out_(&out) {
    if (csv_path) {
      const bool fresh = !std::filesystem::exists(*csv_path) || std::filesystem::file_size(*csv_path) == 0;
      file_.open(*csv_path, std::ios::app);
      if (!file_) throw IoError(*csv_path, "cannot open CSV for writing");
      out_ = &file_;
      if (fresh) *out_ << kCsvHeader << '\n';
    } else {
      *out_ << kCsvHeader << '\n';
    }
  }

  void write(const RunReport& row) {
    *out_ << row.to_csv() << '\n';
    out_->flush();
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  u64 n = 0;
  double gamma = 0.5;
  u64 seed = 1;
  std::filesystem::path out;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& bits_file) {
  auto p = bits_file;
  p += ".bits";
  return p;
}

inline int cmd_gen(const GenOptions& opt, std::ostream& err) {
  if (!(opt.gamma > 0.0 && opt.gamma < 1.0)) {
    err << "gen: --gamma must be in (0, 1)\n";
    return kExitUsage;
  }
  try {
    write_bit_file(opt.out, GammaStream(opt.n, opt.gamma, opt.seed));
    std::ofstream side(sidecar_path(opt.out), std::ios::trunc);
    if (!side) throw IoError(sidecar_path(opt.out), "cannot write length sidecar");
    side << opt.n << '\n';
  } catch (const IoError& e) {
    err << "gen: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

/// Bit length for a stream file: the explicit flag, else the .bits sidecar,
/// else every bit of the file.
inline BitVector load_stream(const std::filesystem::path& path, std::optional<u64> bits) {
  if (!bits) {
    std::ifstream side(sidecar_path(path));
    u64 n = 0;
    if (side && side >> n) bits = n;
  }
  return read_bit_file(path, bits);
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::vector<std::string> engines{"skip"};
  std::vector<std::filesystem::path> streams;
  std::optional<u64> bits;
  double epsilon = 0.1;
  double delta = 0.1;
  u64 seed = 1;
  std::optional<u64> capacity;
  unsigned threads = 1;
  std::optional<std::filesystem::path> csv;
};

template <BitSource S>
RunReport run_ensemble(Engine engine, const std::vector<S>& streams, double epsilon, double delta, u64 seed,
                       std::optional<u64> capacity, unsigned threads, u64 exact) {
  const u64 n = streams.front().size();
  Ensemble ens(EnsembleConfig{epsilon, delta, std::max<u64>(n, 1), streams.size(), seed, capacity, threads});
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t s = 0; s < streams.size(); ++s) ens.feed(s, streams[s], engine);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const EnsembleResult result = ens.query();
  const StreamStats stats = ens.stats();
  RunReport r;
  r.engine = engine_name(engine);
  r.n = n;
  r.k = streams.size();
  r.epsilon = epsilon;
  r.delta = delta;
  r.seed = seed;
  r.estimate = result.estimate.value;
  r.exact = exact;
  r.rel_err = relative_error(r.estimate, exact);
  r.wall_s = wall;
  r.examined = stats.elements_examined;
  r.ds_calls = stats.direct_sample_calls;
  r.max_depth = stats.max_recursion_depth;
  r.peak_kb = peak_rss_kb();
  if (result.estimate.instances_failed > 0) {
    std::clog << "warning: " << result.estimate.instances_failed << " of " << ens.beta()
              << " instances overflowed and were left out of the median\n";
  }
  return r;
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.streams.size() < 2) {
    err << "run: need at least two --streams\n";
    return kExitUsage;
  }
  std::vector<Engine> engines;
  for (const auto& name : opt.engines) {
    const auto e = parse_engine(name);
    if (!e) {
      err << "run: unknown engine '" << name << "'\n";
      return kExitUsage;
    }
    engines.push_back(*e);
  }
  std::vector<BitVector> streams;
  try {
    for (const auto& path : opt.streams) streams.push_back(load_stream(path, opt.bits));
  } catch (const IoError& e) {
    err << "run: " << e.what() << '\n';
    return kExitIo;
  }
  u64 exact = 0;
  try {
    exact = exact_union_count(streams);
  } catch (const std::invalid_argument& e) {
    err << "run: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    CsvSink sink(opt.csv, out);
    for (Engine engine : engines) {
      RunReport row = run_ensemble(engine, streams, opt.epsilon, opt.delta, opt.seed, opt.capacity, opt.threads, exact);
      row.gamma = "file";
      sink.write(row);
    }
  } catch (const EstimateUnavailable& e) {
    err << "run: " << e.what() << '\n';
    return kExitUnavailable;
  } catch (const IoError& e) {
    err << "run: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "run: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  u64 cases = 100000;
  u64 pmax = 1000000;
  u64 seed = 1;
};

struct VerifyTally {
  u64 checked = 0;
  u64 mismatches = 0;
  u64 depth_violations = 0;
};

inline std::string describe(const HitOffset& d) { return d ? std::to_string(*d) : std::string("-1"); }

inline void verify_one(const ProgressionQuery& q, VerifyTally& tally, std::ostream& err) {
  const auto fast = next_hit_instrumented(q);
  const auto slow = brute_next_hit(q);
  ++tally.checked;
  if (fast.offset != slow) {
    if (tally.mismatches < 10) {
      err << "mismatch p=" << q.modulus << " a=" << q.step << " u=" << q.start << " L=" << q.threshold
          << ": next_hit=" << describe(fast.offset) << " brute=" << describe(slow) << '\n';
    }
    ++tally.mismatches;
  }
  if (q.step >= 1 && fast.depth > static_cast<unsigned>(std::bit_width(q.step))) ++tally.depth_violations;
}

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.pmax < 1 || opt.pmax >= (u64{1} << 40)) {
    err << "verify: --pmax must be in [1, 2^40)\n";
    return kExitUsage;
  }
  VerifyTally tally;
  bool pinned_ok = true;
  const struct {
    ProgressionQuery q;
    HitOffset expected;
  } pinned[] = {
      {{13, 4, 7, 1}, 5},
      {{8, 4, 6, 1}, std::nullopt},
      {{13, 1, 7, 1}, 6},
      {{5, 0, 3, 2}, std::nullopt},
  };
  for (const auto& c : pinned) {
    const auto got = next_hit(c.q);
    out << "pinned (" << c.q.modulus << "," << c.q.step << "," << c.q.start << "," << c.q.threshold
        << ") -> " << describe(got) << (got == c.expected ? "  ok" : "  WRONG") << '\n';
    pinned_ok &= got == c.expected;
  }

  for (u64 p = 1; p <= 64; ++p) {
    for (u64 a = 0; a < p; ++a) {
      for (u64 u = 0; u < p; ++u) {
        for (u64 L = 0; L <= p; ++L) verify_one({p, a, u, L}, tally, err);
      }
    }
  }
  const u64 exhaustive = tally.checked;

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> log_p(0.0, std::log(static_cast<double>(opt.pmax)));
  for (u64 i = 0; i < opt.cases; ++i) {
    const u64 p = std::clamp<u64>(static_cast<u64>(std::exp(log_p(rng))), 1, opt.pmax);
    const u64 a = rng() % p;
    const u64 u = rng() % p;
    const unsigned shift = static_cast<unsigned>(rng() % std::bit_width(p));
    const u64 L = (i % 2 == 0) ? rng() % (p + 1) : (p >> shift) - 1;
    verify_one({p, a, u, L}, tally, err);
  }

  out << "exhaustive p<=64: " << exhaustive << " cases\n";
  out << "random p<=" << opt.pmax << ": " << tally.checked - exhaustive << " cases\n";
  out << "mismatches: " << tally.mismatches << "\n";
  out << "depth bound violations: " << tally.depth_violations << "\n";
  const bool ok = pinned_ok && tally.mismatches == 0 && tally.depth_violations == 0;
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitMismatch;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::vector<u64> sizes{100000, 1000000, 10000000};
  double gamma = 0.3;
  std::vector<double> epsilons{0.1};
  double delta = 0.1;
  std::size_t k = 2;
  u64 trials = 1;
  std::vector<std::string> engines{"scan", "skip"};
  u64 seed = 1;
  unsigned threads = 1;
  std::optional<std::filesystem::path> csv;
};

/// Seed of generated stream s in trial t.
inline u64 bench_stream_seed(u64 seed, u64 trial, std::size_t stream) {
  return splitmix64(splitmix64(seed ^ 0x5bd1e995ULL) + (trial << 8) + stream);
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<Engine> engines;
  for (const auto& name : opt.engines) {
    const auto e = parse_engine(name);
    if (!e) {
      err << "bench: unknown engine '" << name << "'\n";
      return kExitUsage;
    }
    engines.push_back(*e);
  }
  if (opt.k < 2 || !(opt.gamma > 0.0 && opt.gamma < 1.0)) {
    err << "bench: need --k >= 2 and --gamma in (0, 1)\n";
    return kExitUsage;
  }
  try {
    CsvSink sink(opt.csv, out);
    std::ostringstream gamma;
    gamma << opt.gamma;
    for (u64 n : opt.sizes) {
      for (u64 t = 0; t < opt.trials; ++t) {
        std::vector<GammaStream> streams;
        for (std::size_t s = 0; s < opt.k; ++s) streams.emplace_back(n, opt.gamma, bench_stream_seed(opt.seed, t, s));
        const u64 exact = exact_union_count(streams);
        for (double eps : opt.epsilons) {
          for (Engine engine : engines) {
            RunReport row = run_ensemble(engine, streams, eps, opt.delta, opt.seed + t, std::nullopt, opt.threads, exact);
            row.gamma = gamma.str();
            sink.write(row);
          }
        }
      }
    }
  } catch (const EstimateUnavailable& e) {
    err << "bench: " << e.what() << '\n';
    return kExitUnavailable;
  } catch (const IoError& e) {
    err << "bench: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "bench: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sketch / merge: one processor writes its sample, the referee merges files.

struct SketchOptions {
  std::filesystem::path stream;
  std::optional<u64> bits;
  std::optional<u64> n_bound;
  std::string engine = "skip";
  double epsilon = 0.1;
  u64 seed = 1;
  u64 instance = 0;
  std::optional<u64> capacity;
  std::filesystem::path out;
};

inline int cmd_sketch(const SketchOptions& opt, std::ostream& err) {
  const auto engine = parse_engine(opt.engine);
  if (!engine) {
    err << "sketch: unknown engine '" << opt.engine << "'\n";
    return kExitUsage;
  }
  try {
    const BitVector src = load_stream(opt.stream, opt.bits);
    const u64 n_bound = opt.n_bound.value_or(std::max<u64>(src.size(), 1));
    if (src.size() > n_bound) {
      err << "sketch: stream has " << src.size() << " bits, more than --n-bound " << n_bound << '\n';
      return kExitUsage;
    }
    const HashFn h = instance_hash(opt.seed, opt.instance, n_bound);
    Sketch sk(h, opt.capacity ? Capacity{*opt.capacity} : capacity_for(opt.epsilon));
    if (*engine == Engine::kScan) {
      sk.process_scan(src);
    } else {
      sk.process_skip(src);
    }
    write_sketch_file(opt.out, sk.summary());
  } catch (const IoError& e) {
    err << "sketch: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "sketch: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

inline int cmd_merge(const std::vector<std::filesystem::path>& files, std::ostream& out, std::ostream& err) {
  std::vector<SketchSummary> sketches;
  try {
    for (const auto& f : files) sketches.push_back(read_sketch_file(f));
  } catch (const IoError& e) {
    err << "merge: " << e.what() << '\n';
    return kExitIo;
  } catch (const DecodeError& e) {
    err << "merge: " << e.what() << '\n';
    return kExitIo;
  }
  try {
    const Estimate e = merge(sketches);
    out << "estimate,level,union_size\n" << e.value << ',' << e.level << ',' << e.union_size << '\n';
  } catch (const MergeError& e) {
    err << "merge: " << e.what() << '\n';
    return e.kind() == MergeError::Kind::kFailedSketch ? kExitUnavailable : kExitUsage;
  }
  return kExitOk;
}

}  // namespace dsample::cli
