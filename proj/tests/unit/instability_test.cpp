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

#include "synthetic.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/instability.hpp"

namespace valuerank {
namespace {

InstabilityItem item(std::string id, std::optional<double> reference, std::string value = "care") {
  InstabilityItem it;
  it.id = std::move(id);
  it.text = "text " + it.id;
  it.value = std::move(value);
  it.reference = reference;
  return it;
}

TEST(SummarizeScores, HandInstance) {
  const std::vector<InstabilityItem> items = {item("a", 2.0), item("b", -1.0)};
  const auto r = summarize_scores({{1.0, 3.0}, {-2.0, 2.0}}, items, InstabilityMode::Rating);
  EXPECT_DOUBLE_EQ(r.mean_variance, 2.5);
  EXPECT_DOUBLE_EQ(r.mean_max_range, 3.0);
  EXPECT_DOUBLE_EQ(r.sign_flip_rate, 0.5);
  EXPECT_DOUBLE_EQ(*r.sign_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*r.pairwise_accuracy, 1.0);
  EXPECT_EQ(r.judges, 2u);
}

TEST(SummarizeScores, ReferencesAreOptionalAndPairsStayWithinAValue) {
  const std::vector<InstabilityItem> items = {item("a", std::nullopt), item("b", 1.0, "care"),
                                              item("c", -1.0, "order")};
  const auto r = summarize_scores({{1.0}, {2.0}, {3.0}}, items, InstabilityMode::Ranking);
  EXPECT_DOUBLE_EQ(*r.sign_accuracy, 0.5);
  EXPECT_FALSE(r.pairwise_accuracy);
  EXPECT_EQ(r.sign_flip_rate, 0.0);
  EXPECT_THROW(summarize_scores({{1.0}, {2.0, 3.0}, {1.0}}, items, InstabilityMode::Rating), InvalidArgument);
  EXPECT_THROW(summarize_scores({{1.0}}, items, InstabilityMode::Rating), InvalidArgument);
}

std::vector<InstabilityItem> planted_items() {
  std::vector<InstabilityItem> out;
  for (int i = 0; i < 10; ++i) {
    auto it = item("i" + std::to_string(i), -9.0 + 2.0 * i);
    it.planted_utility = it.reference;
    out.push_back(it);
  }
  return out;
}

std::shared_ptr<SimulatedTruth> truth_of(const std::vector<InstabilityItem>& items) {
  auto truth = std::make_shared<SimulatedTruth>();
  for (const auto& it : items) truth->utilities[it.id] = *it.planted_utility;
  return truth;
}

TEST(CompareInstability, AgreeingJudgesShowNoSpread) {
  const auto items = planted_items();
  const auto truth = truth_of(items);
  SimulatedJudge a(testing::simulated_spec(0.0, 1), truth), b(testing::simulated_spec(0.0, 2), truth);
  Judge* judges[] = {&a, &b};
  InstabilityConfig config;
  const auto rating = compare_instability(items, judges, config);
  EXPECT_EQ(rating.mean_variance, 0.0);
  EXPECT_EQ(*rating.sign_accuracy, 1.0);
  EXPECT_EQ(*rating.pairwise_accuracy, 1.0);

  config.mode = InstabilityMode::Ranking;
  config.repetitions = 10;
  const auto ranking = compare_instability(items, judges, config);
  EXPECT_EQ(ranking.scores.size(), 10u);
  EXPECT_EQ(*ranking.pairwise_accuracy, 1.0);
  for (const auto& row : ranking.scores) {
    for (double s : row) {
      EXPECT_GE(s, -10.0);
      EXPECT_LE(s, 10.0);
    }
  }
}

TEST(CompareInstability, BiasedJudgesDisagreeWhenRatingButNotWhenRanking) {
  const auto items = planted_items();
  const auto truth = truth_of(items);
  JudgeSpec low = testing::simulated_spec(0.0, 1), high = testing::simulated_spec(0.0, 2);
  low.bias = -3.0;
  high.bias = 3.0;
  SimulatedJudge a(low, truth), b(high, truth);
  Judge* judges[] = {&a, &b};
  InstabilityConfig config;
  const auto rating = compare_instability(items, judges, config);
  // Offsets of +/-3 give variance 9, except where clamping at +/-10 bites: (4 + 4 + 8 * 9) / 10.
  EXPECT_DOUBLE_EQ(rating.mean_variance, 8.0);
  config.mode = InstabilityMode::Ranking;
  config.repetitions = 10;
  // A shared offset cancels inside each judge's ranking.
  EXPECT_LT(compare_instability(items, judges, config).mean_variance, 1e-12);
}

TEST(CompareInstability, Rejects) {
  const auto items = planted_items();
  EXPECT_THROW(compare_instability(items, std::span<Judge* const>{}, {}), InvalidArgument);
  const auto truth = truth_of(items);
  SimulatedJudge a(testing::simulated_spec(0.0, 1), truth);
  Judge* judges[] = {&a};
  InstabilityConfig config;
  config.mode = InstabilityMode::Ranking;
  config.window_size = 11;
  EXPECT_THROW(compare_instability(items, judges, config), InvalidArgument);
  EXPECT_EQ(parse_instability_mode(to_string(InstabilityMode::Ranking)), InstabilityMode::Ranking);
}

TEST(InstabilityItems, Parse) {
  const auto items = parse_instability_items(
      R"({"text": "helps", "value": "care", "reference": 3})" "\n" R"({"id": "x", "text": "hurts", "value": "care"})" "\n");
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[0].reference, 3.0);
  EXPECT_EQ(items[1].id, "x");
  EXPECT_FALSE(items[0].id.empty());
  EXPECT_THROW(parse_instability_items(R"({"value": "care"})" "\n"), SchemaError);
}

}  // namespace
}  // namespace valuerank
