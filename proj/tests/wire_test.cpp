#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <vector>

#include "dsample/wire.hpp"

namespace dsample {
namespace {

TEST(Wire, EmptySketchLayout) {
  const HashFn h(4, 3, 13, 1);
  const auto bytes = serialize(Sketch(h, 0.5));
  ASSERT_EQ(bytes.size(), kWireHeaderSize);
  const std::vector<std::uint8_t> expected = {
      'D', 'S', 'K', '1', 1, 0,          // magic, version, failed
      13, 0, 0, 0, 0, 0, 0, 0,           // p
      4, 0, 0, 0, 0, 0, 0, 0,            // a
      3, 0, 0, 0, 0, 0, 0, 0,            // b
      1, 0, 0, 0, 0, 0, 0, 0,            // n_bound
      0, 0,                              // level
      0, 0, 0, 0};                       // count
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(deserialize(bytes), Sketch(h, 0.5).summary());
}

TEST(Wire, PositionsAreLittleEndian) {
  Sketch sk(HashFn(4, 3, 13, 1), Capacity{10});
  sk.insert(258);  // 0x0102
  const auto bytes = serialize(sk);
  ASSERT_EQ(bytes.size(), kWireHeaderSize + 8);
  EXPECT_EQ(bytes[kWireHeaderSize - 4], 1);  // count
  EXPECT_EQ(bytes[kWireHeaderSize], 0x02);
  EXPECT_EQ(bytes[kWireHeaderSize + 1], 0x01);
}

TEST(Wire, RoundTripProperty) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const u64 n = 1000 + rng() % 200000;
    const HashFn h = new_hash(n, rng);
    Sketch sk(h, trial % 2 ? 0.1 : 0.5);
    sk.process_skip(GammaStream(n, 0.6, rng()));
    const SketchSummary back = deserialize(serialize(sk));
    EXPECT_EQ(back, sk.summary());
    EXPECT_EQ(serialize(back), serialize(sk));
  }
}

TEST(Wire, FullSixThousandElementSketch) {
  std::mt19937_64 rng(5);
  const u64 n = 1000000;
  const HashFn h = new_hash(n, rng);
  Sketch sk(h, 0.1);
  for (u64 x = 1; sk.size() < 6000; ++x) sk.insert(x);
  ASSERT_EQ(sk.size(), 6000u);
  EXPECT_EQ(deserialize(serialize(sk)), sk.summary());
}

TEST(Wire, FailedSketchCarriesMarker) {
  Sketch sk(HashFn(4, 3, 13, 1), Capacity{1});
  sk.insert(9);
  sk.insert(22);
  ASSERT_TRUE(sk.failed());
  const auto bytes = serialize(sk);
  EXPECT_EQ(bytes[5], 1);
  const SketchSummary back = deserialize(bytes);
  EXPECT_TRUE(back.failed);
  EXPECT_TRUE(back.positions.empty());
}

TEST(Wire, TruncationIsADecodeErrorAtEveryLength) {
  Sketch sk(HashFn(4, 3, 13, 1), Capacity{10});
  sk.insert(1);
  sk.insert(2);
  const auto bytes = serialize(sk);
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const std::span<const std::uint8_t> cut(bytes.data(), len);
    EXPECT_THROW(deserialize(cut), DecodeError) << len;
  }
}

TEST(Wire, MalformedFieldsReportOffsets) {
  Sketch sk(HashFn(4, 3, 13, 1), Capacity{10});
  sk.insert(1);
  sk.insert(2);
  const auto good = serialize(sk);

  auto expect_error_at = [](std::vector<std::uint8_t> bytes, std::size_t offset) {
    try {
      deserialize(bytes);
      FAIL() << "expected DecodeError";
    } catch (const DecodeError& e) {
      EXPECT_EQ(e.offset(), offset) << e.what();
    }
  };

  auto bad = good;
  bad[0] = 'X';
  expect_error_at(bad, 0);
  bad = good;
  bad[4] = 2;
  expect_error_at(bad, 4);
  bad = good;
  bad[5] = 7;
  expect_error_at(bad, 5);
  bad = good;
  bad[6] = 15;  // p = 15, not prime
  expect_error_at(bad, 6);
  bad = good;
  bad[38] = 9;  // level 9 > max level 3
  expect_error_at(bad, 38);
  bad = good;
  std::swap(bad[44], bad[52]);  // positions 2, 1: not increasing
  expect_error_at(bad, 52);
  bad = good;
  bad[44] = 0;  // position 0
  expect_error_at(bad, 44);
  bad = good;
  bad.push_back(0);
  expect_error_at(bad, good.size());
}

TEST(Wire, RejectsPositionsOutsideStoredLevel) {
  // h(1) = 7 is not in R_1 = {0..5}.
  SketchSummary s{HashFn(4, 3, 13, 1), 1, false, {1}};
  EXPECT_THROW(deserialize(serialize(s)), DecodeError);
}

TEST(Wire, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "dsample_wire_test.dsk";
  std::mt19937_64 rng(2);
  const HashFn h = new_hash(10000, rng);
  Sketch sk(h, 0.5);
  sk.process_scan(GammaStream(10000, 0.5, 1));
  write_sketch_file(path, sk.summary());
  EXPECT_EQ(read_sketch_file(path), sk.summary());
  std::filesystem::remove(path);
  EXPECT_THROW(read_sketch_file(path), IoError);
}

}  // namespace
}  // namespace dsample
