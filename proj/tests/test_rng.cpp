#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "page/rng.hpp"

using page::CounterRng;
using page::Stream;

// Known-answer vectors published with the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  const auto out = page::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = page::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                       {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = page::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                       {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, SameSeedAndStreamReplays) {
  CounterRng a(42, Stream::kBatch);
  CounterRng b(42, Stream::kBatch);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.position(), 1000u);
}

TEST(CounterRng, StreamsDiffer) {
  CounterRng a(42, Stream::kBatch);
  CounterRng b(42, Stream::kBatchPrime);
  CounterRng c(43, Stream::kBatch);
  int same_ab = 0, same_ac = 0;
  for (int k = 0; k < 256; ++k) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(CounterRng, UnitIntervalAndMoments) {
  CounterRng r(7, Stream::kMonteCarlo);
  const int m = 200000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const double u = r.next_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  // Mean 1/2, variance 1/12; 5 standard errors.
  EXPECT_NEAR(s / m, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / m));
  EXPECT_NEAR(s2 / m - (s / m) * (s / m), 1.0 / 12.0, 1e-3);
}

TEST(CounterRng, IndexIsInRangeAndCoversSmallSets) {
  CounterRng r(3, Stream::kBatch);
  std::vector<int> hits(7, 0);
  for (int k = 0; k < 70000; ++k) {
    const auto i = r.next_index(7);
    ASSERT_LT(i, 7u);
    ++hits[i];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
  EXPECT_EQ(r.next_index(1), 0u);
}

TEST(CounterRng, BernoulliConsumesOneDrawForAnyP) {
  CounterRng a(9, Stream::kBranchCoin);
  CounterRng b(9, Stream::kBranchCoin);
  EXPECT_TRUE(a.bernoulli(1.0));
  EXPECT_FALSE(b.bernoulli(0.0));
  EXPECT_EQ(a.position(), b.position());
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterRng, BernoulliFrequency) {
  CounterRng r(11, Stream::kBranchCoin);
  const int m = 100000;
  int heads = 0;
  for (int k = 0; k < m; ++k) heads += r.bernoulli(0.3);
  EXPECT_NEAR(static_cast<double>(heads) / m, 0.3, 5.0 * std::sqrt(0.21 / m));
}

TEST(CounterRng, NormalMoments) {
  CounterRng r(5, Stream::kEstimate);
  const int m = 100000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const double z = r.next_normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / m, 0.0, 5.0 / std::sqrt(m));
  EXPECT_NEAR(s2 / m, 1.0, 0.02);
}

TEST(Substream, DistinctIds) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < 1000; ++k) ids.insert(page::substream(Stream::kMonteCarlo, k));
  EXPECT_EQ(ids.size(), 1000u);
  EXPECT_NE(page::substream(Stream::kMonteCarlo, 1), page::substream(Stream::kEstimate, 1));
}
