// Copyright 2026 The Valuerank Authors.
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

#include <cmath>
#include <set>

#include "valuerank/rng.hpp"
#include "valuerank/stats.hpp"

namespace valuerank {
namespace {

TEST(Rng, SeedsAreDeterministicAndTagged) {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(derive_seed(1, "windows"), derive_seed(1, "windows"));
  EXPECT_NE(derive_seed(1, "windows"), derive_seed(1, "fit"));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Rng, SamplingWithoutReplacement) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = rng.sample_without_replacement(10, 4);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 4u);
    for (auto i : s) EXPECT_LT(i, 10u);
  }
  EXPECT_EQ(rng.sample_without_replacement(3, 3).size(), 3u);
  EXPECT_THROW(rng.sample_without_replacement(3, 4), std::exception);
}

TEST(Rng, DistributionMoments) {
  Rng rng(11);
  constexpr int kDraws = 200000;
  double normal_sum = 0, normal_sq = 0, gumbel_sum = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = rng.normal();
    normal_sum += z;
    normal_sq += z * z;
    gumbel_sum += rng.gumbel(2.0);
  }
  EXPECT_NEAR(normal_sum / kDraws, 0.0, 0.01);
  EXPECT_NEAR(normal_sq / kDraws, 1.0, 0.01);
  // Gumbel(0, beta) has mean beta * Euler-Mascheroni.
  EXPECT_NEAR(gumbel_sum / kDraws, 2.0 * 0.5772156649015329, 0.02);
}

TEST(Stats, Moments) {
  const std::vector<double> xs = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(stats::mean(xs), 5.0);
  EXPECT_DOUBLE_EQ(stats::population_variance(xs), 4.0);
  EXPECT_DOUBLE_EQ(stats::population_sd(xs), 2.0);
  EXPECT_DOUBLE_EQ(stats::median(xs), 4.5);
  EXPECT_DOUBLE_EQ(stats::quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
}

TEST(Stats, RanksAndCorrelations) {
  EXPECT_EQ(stats::average_ranks(std::vector<double>{10, 30, 20, 20}), (std::vector<double>{1, 4, 2.5, 2.5}));
  const std::vector<double> x = {1, 2, 3, 4, 5}, y = {2, 4, 6, 8, 11}, r = {5, 4, 3, 2, 1};
  EXPECT_NEAR(*stats::spearman(x, y), 1.0, 1e-12);
  EXPECT_NEAR(*stats::kendall_tau(x, r), -1.0, 1e-12);
  EXPECT_NEAR(*stats::pearson(x, std::vector<double>{2, 4, 6, 8, 10}), 1.0, 1e-12);
  EXPECT_FALSE(stats::pearson(x, std::vector<double>{1, 1, 1, 1, 1}));
}

}  // namespace
}  // namespace valuerank
