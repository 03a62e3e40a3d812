#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "dsample/ensemble.hpp"

namespace dsample {
namespace {

TEST(Ensemble, InstanceCount) {
  EXPECT_EQ(instances_for(0.05), 72u);
  EXPECT_EQ(instances_for(0.5), 17u);
  EXPECT_EQ(instances_for(0.1), 56u);
  EXPECT_THROW(instances_for(0.0), std::invalid_argument);
  EXPECT_THROW(instances_for(1.0), std::invalid_argument);
  EXPECT_EQ(Ensemble(0.1, 0.05, 1000, 2, 1).beta(), 72u);
}

TEST(Ensemble, ConstructorValidates) {
  EXPECT_THROW(Ensemble(0.1, 0.1, 1000, 1, 1), std::invalid_argument);
  EXPECT_THROW(Ensemble(1.5, 0.1, 1000, 2, 1), std::invalid_argument);
  EXPECT_THROW(Ensemble(0.1, 0.0, 1000, 2, 1), std::invalid_argument);
  EXPECT_THROW(Ensemble(0.1, 0.1, 0, 2, 1), std::invalid_argument);
}

TEST(Ensemble, SameSeedSameHashes) {
  const Ensemble a(0.1, 0.1, 100000, 3, 77), b(0.1, 0.1, 100000, 3, 77), c(0.1, 0.1, 100000, 3, 78);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.beta(); ++i) {
    EXPECT_EQ(a.hash(i), b.hash(i));
    EXPECT_EQ(a.hash(i), instance_hash(77, i, 100000));
    any_differs |= !(a.hash(i) == c.hash(i));
    for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(a.sketch(i, s).hash(), a.hash(i));
  }
  EXPECT_TRUE(any_differs);
  std::vector<u64> primes;
  for (std::size_t i = 0; i < a.beta(); ++i) primes.push_back(a.hash(i).p());
  std::sort(primes.begin(), primes.end());
  EXPECT_GT(std::unique(primes.begin(), primes.end()) - primes.begin(), 40);  // instances are independent
}

TEST(Ensemble, ScanAndSkipAgree) {
  const u64 n = 200000;
  for (u64 seed : {1, 2, 3}) {
    Ensemble scan(0.2, 0.2, n, 2, seed), skip(0.2, 0.2, n, 2, seed);
    for (std::size_t s = 0; s < 2; ++s) {
      const GammaStream src(n, 0.3, 10 * seed + s);
      scan.feed(s, src, Engine::kScan);
      skip.feed(s, src, Engine::kSkip);
    }
    const auto r1 = scan.query(), r2 = skip.query();
    EXPECT_EQ(r1.estimate, r2.estimate);
    for (std::size_t i = 0; i < scan.beta(); ++i) {
      EXPECT_EQ(scan.sketch(i, 0).summary(), skip.sketch(i, 0).summary());
      EXPECT_EQ(r1.instances[i].value, r2.instances[i].value);
    }
    EXPECT_EQ(scan.stats().elements_examined, scan.beta() * 2 * n);
    EXPECT_LT(skip.stats().elements_examined, scan.stats().elements_examined);
  }
}

TEST(Ensemble, EmptyStreamsEstimateZero) {
  Ensemble ens(0.1, 0.1, 1000, 2, 5);
  ens.feed(0, BitVector(1000), Engine::kSkip);
  ens.feed(1, BitVector(1000), Engine::kSkip);
  EXPECT_EQ(ens.query().estimate.value, 0u);
}

TEST(Ensemble, QueryIsRepeatable) {
  const u64 n = 50000;
  Ensemble ens(0.2, 0.1, n, 3, 9);
  for (std::size_t s = 0; s < 3; ++s) ens.feed(s, GammaStream(n, 0.4, s), Engine::kSkip);
  const auto first = ens.query();
  const auto second = ens.query();
  EXPECT_EQ(first.estimate, second.estimate);
  EXPECT_EQ(first.instances.size(), ens.beta());
}

TEST(Ensemble, ExactRegimeReturnsTrueCount) {
  const u64 n = 100000;
  for (u64 seed = 0; seed < 5; ++seed) {
    const std::vector<GammaStream> streams{GammaStream(n, 0.01, 2 * seed), GammaStream(n, 0.01, 2 * seed + 1)};
    const u64 truth = popcount_or(streams);
    ASSERT_LE(truth, capacity_for(0.1).value);
    Ensemble ens(0.1, 0.1, n, 2, seed);
    ens.feed(0, streams[0], Engine::kSkip);
    ens.feed(1, streams[1], Engine::kSkip);
    const auto r = ens.query();
    EXPECT_EQ(r.estimate.value, truth);
    EXPECT_EQ(r.estimate.level, 0u);
    for (const auto& d : r.instances) EXPECT_EQ(d.value, truth);
  }
}

TEST(Ensemble, ThreadedFeedMatchesSequential) {
  const u64 n = 100000;
  EnsembleConfig cfg{0.2, 0.1, n, 2, 31, std::nullopt, 1};
  Ensemble seq(cfg);
  cfg.threads = 4;
  Ensemble par(cfg);
  for (std::size_t s = 0; s < 2; ++s) {
    const GammaStream src(n, 0.3, s + 100);
    seq.feed(s, src, Engine::kSkip);
    par.feed(s, src, Engine::kSkip);
  }
  EXPECT_EQ(seq.query().estimate, par.query().estimate);
  EXPECT_EQ(seq.stats(), par.stats());
}

TEST(Ensemble, FeedAndQueryPreconditions) {
  Ensemble ens(0.5, 0.5, 100, 2, 1);
  EXPECT_THROW(ens.feed(2, BitVector(10), Engine::kSkip), std::out_of_range);
  EXPECT_THROW(ens.feed(0, BitVector(101), Engine::kSkip), std::invalid_argument);
  ens.feed(0, BitVector(10), Engine::kSkip);
  EXPECT_THROW(ens.feed(0, BitVector(10), Engine::kSkip), std::logic_error);
  EXPECT_THROW(ens.query(), std::logic_error);  // stream 1 not fed
  ens.feed(1, BitVector(11), Engine::kScan);
  EXPECT_THROW(ens.query(), std::logic_error);  // unequal lengths
}

TEST(Ensemble, CapacityOverride) {
  EnsembleConfig cfg{0.1, 0.5, 10000, 2, 3, u64{50}, 1};
  Ensemble ens(cfg);
  EXPECT_EQ(ens.sketch(0, 0).capacity(), 50u);
}

TEST(Median, LowerMedian) {
  EXPECT_EQ(median_lower({8, 10, 400}), 10u);
  EXPECT_EQ(median_lower({400, 8, 10}), 10u);
  EXPECT_EQ(median_lower({1, 2, 3, 4}), 2u);
  EXPECT_EQ(median_lower({5}), 5u);
  EXPECT_THROW(median_lower({}), std::invalid_argument);
}

TEST(Median, RobustToMinorityCorruption) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng() % 60;
    std::vector<u64> values(m);
    for (auto& v : values) v = 1000 + rng() % 100;
    const std::size_t corrupt = (m - 1) / 2;  // strictly fewer than m / 2
    std::vector<u64> mixed = values;
    std::vector<u64> kept(values.begin() + static_cast<std::ptrdiff_t>(corrupt), values.end());
    for (std::size_t i = 0; i < corrupt; ++i) mixed[i] = (rng() % 2) ? 0 : ~u64{0};
    const u64 med = median_lower(mixed);
    EXPECT_GE(med, *std::min_element(kept.begin(), kept.end()));
    EXPECT_LE(med, *std::max_element(kept.begin(), kept.end()));
  }
}

TEST(CombineInstances, FailurePolicy) {
  using O = std::optional<Estimate>;
  const std::vector<O> some_failed{Estimate{8, 0, 8, 0}, O{}, Estimate{10, 1, 5, 0}, Estimate{400, 2, 100, 0}, O{}};
  const auto r = combine_instances(some_failed);
  EXPECT_EQ(r.estimate.value, 10u);
  EXPECT_EQ(r.estimate.level, 1u);
  EXPECT_EQ(r.estimate.instances_failed, 2u);
  EXPECT_TRUE(r.instances[1].failed);

  const std::vector<O> half{Estimate{8, 0, 8, 0}, O{}};
  EXPECT_EQ(combine_instances(half).estimate.value, 8u);
  const std::vector<O> most{Estimate{8, 0, 8, 0}, O{}, O{}};
  EXPECT_THROW(combine_instances(most), EstimateUnavailable);
  EXPECT_THROW(combine_instances(std::vector<O>{}), EstimateUnavailable);
}

}  // namespace
}  // namespace dsample
