/*
 * Copyright 2026 The pfbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include "pf/rng.hpp"
#include "pf/tensor.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

TEST(PhiloxTest, KnownAnswerVectors) {
  const auto zero = Philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  const auto ones = Philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                               {0xffffffff, 0xffffffff});
  EXPECT_EQ(ones, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  const auto pi = Philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             {0xa4093822, 0x299f31d0});
  EXPECT_EQ(pi, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRngTest, StreamsAreReproducibleAndDistinct) {
  CounterRng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.NextU64();
    EXPECT_EQ(va, b.NextU64());
    EXPECT_NE(va, c.NextU64());
    EXPECT_NE(va, d.NextU64());
  }
}

TEST(CounterRngTest, UniformRanges) {
  CounterRng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double o = rng.UniformOpen();
    EXPECT_GT(o, 0.0);
    EXPECT_LT(o, 1.0);
    EXPECT_LT(rng.UniformInt(7), 7u);
  }
}

TEST(CounterRngTest, UniformIntIsBalanced) {
  CounterRng rng(3);
  std::vector<int> counts(3);
  for (int i = 0; i < 30000; ++i) ++counts[rng.UniformInt(3)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(CounterRngTest, NormalMoments) {
  CounterRng rng(5);
  std::vector<double> v(200000);
  for (double& x : v) x = rng.Normal();
  const double mean = PairwiseSum(v) / v.size();
  for (double& x : v) x = (x - mean) * (x - mean);
  const double var = PairwiseSum(v) / v.size();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(CounterRngTest, PoissonMomentsBothRegimes) {
  for (double lambda : {3.5, 500.0}) {
    CounterRng rng(7);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.Poisson(lambda));
      s += k;
      s2 += k * k;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, lambda, 4.0 * std::sqrt(lambda / n) + 1e-9) << lambda;
    EXPECT_NEAR(var / lambda, 1.0, 0.03) << lambda;
  }
}

TEST(SeedTest, DeriveSeedAndHashAreStable) {
  EXPECT_EQ(HashString(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(HashString("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_NE(DeriveSeed(1, 2), DeriveSeed(2, 1));
  EXPECT_EQ(DeriveSeed(1, 2), DeriveSeed(1, 2));
}

TEST(PairwiseSumTest, MatchesExactSumOfIntegers) {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = i;
  EXPECT_EQ(PairwiseSum(v), 499500.0);
  EXPECT_EQ(PairwiseSum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace pf
