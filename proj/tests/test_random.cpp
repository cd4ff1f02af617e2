// Copyright 2026 The TaskDrop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "taskdrop/random.hpp"

namespace taskdrop {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  Rng c(7), d(7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(Rng, UniformStaysInRange) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform(-0.08, 0.08);
    ASSERT_GE(v, -0.08);
    ASSERT_LT(v, 0.08);
  }
}

TEST(Rng, BernoulliEdgeProbabilities) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_TRUE(rng.bernoulli(1.0));
    ASSERT_FALSE(rng.bernoulli(0.0));
  }
}

TEST(Rng, NormalMomentsAreStandard) {
  Rng rng(11);
  constexpr int kDraws = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  // Standard errors: 1/sqrt(n) ~ 0.0022 for the mean, sqrt(2/n) ~ 0.0032 for the variance.
  EXPECT_NEAR(sum / kDraws, 0.0, 0.012);
  EXPECT_NEAR(sq / kDraws, 1.0, 0.016);
}

TEST(Rng, BelowIsUniformAndBounded) {
  Rng rng(5);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const auto k = rng.below(6);
    ASSERT_LT(k, 6u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  std::vector<int> identity(50);
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_NE(v, identity);
}

TEST(DeriveSeed, TagsGiveDistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ull, 1ull, 2ull}) {
    seen.insert(derive_seed(base, {}));
    for (std::uint64_t t = 0; t < 20; ++t) {
      seen.insert(derive_seed(base, {t}));
      seen.insert(derive_seed(base, {t, 1}));
    }
  }
  EXPECT_EQ(seen.size(), 3u * 41u);
  EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
  EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
}

}  // namespace
}  // namespace taskdrop
