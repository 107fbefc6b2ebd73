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
#include <random>

#include "oracles.hpp"
#include "scripted_judge.hpp"
#include "synthetic.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/evaluator.hpp"

namespace valuerank {
namespace {

using testing::ScriptedJudge;

VidbEntry anchor(const std::string& id, double score, const std::string& value = "benevolence") {
  VidbEntry e;
  e.item_id = id;
  e.value = value;
  e.theory = "schwartz";
  e.text = "anchor " + id;
  e.raw_utility = score;
  e.calibrated_score = score;
  e.final_score = score;
  e.n_windows = 30;
  return e;
}

std::vector<VidbEntry> five_anchors() {
  return {anchor("a", -8), anchor("b", -4), anchor("c", 0.5), anchor("d", 4), anchor("e", 8)};
}

// Simulated judge whose truth holds the anchors and the given responses.
struct NoiselessSetup {
  std::shared_ptr<SimulatedTruth> truth = std::make_shared<SimulatedTruth>();
  std::unique_ptr<SimulatedJudge> judge;

  NoiselessSetup(const std::vector<VidbEntry>& db, const std::map<std::string, double>& responses,
                 double noise = 0.0) {
    for (const auto& e : db) truth->utilities[e.item_id] = e.final_score;
    for (const auto& [text, u] : responses) truth->utilities[response_item_id(text)] = u;
    judge = std::make_unique<SimulatedJudge>(testing::simulated_spec(noise, 3), truth);
  }
};

EvalConfig config(AnchorStrategy strategy, std::size_t k = 6, std::size_t m = 3) {
  EvalConfig c;
  c.window_size = k;
  c.iterations = m;
  c.strategy = strategy;
  c.rng_seed = 17;
  return c;
}

// Anchor sampling -----------------------------------------------------------

TEST(SampleAnchors, BucketedDrawsOneAnchorPerBin) {
  std::vector<VidbEntry> db;
  for (int i = 0; i <= 40; ++i) db.push_back(anchor("x" + std::to_string(i), -10.0 + 0.5 * i));
  const AnchorPool pool(db, "benevolence");
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto anchors = sample_anchors(pool, config(AnchorStrategy::Bucketed), rng);
    ASSERT_EQ(anchors.size(), 5u);
    for (std::size_t b = 0; b < 5; ++b) {
      const double lo = -10.0 + 4.0 * static_cast<double>(b);
      EXPECT_GE(anchors[b]->final_score, lo);
      if (b < 4) EXPECT_LT(anchors[b]->final_score, lo + 4.0);
      else EXPECT_LE(anchors[b]->final_score, 10.0);
    }
  }
}

TEST(SampleAnchors, EmptyBinFallsBackToNearestAndSaysSo) {
  const std::vector<VidbEntry> db = {anchor("a", -9), anchor("b", -8.5), anchor("c", -1.5),
                                     anchor("d", 1.5), anchor("e", 3), anchor("f", 9)};
  const AnchorPool pool(db, "benevolence");
  Rng rng(2);
  std::vector<std::string> notes;
  const auto anchors = sample_anchors(pool, config(AnchorStrategy::Bucketed), rng, &notes);
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_NE(notes[0].find("empty bin"), std::string::npos);
  // Bin [-6, -2) is empty; -1.5 is the unused entry closest to its centre.
  EXPECT_EQ(anchors[1]->item_id, "c");
  EXPECT_EQ(anchors[2]->item_id, "d");
  EXPECT_EQ(anchors[3]->item_id, "e");
  EXPECT_EQ(anchors[4]->item_id, "f");
}

TEST(SampleAnchors, FixedAndRandom) {
  const auto db = five_anchors();
  const AnchorPool pool(db, "benevolence");
  auto fixed = config(AnchorStrategy::Fixed, 3);
  fixed.fixed_panel = {"e", "a"};
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto a = sample_anchors(pool, fixed, rng);
    EXPECT_EQ(a[0]->item_id, "e");
    EXPECT_EQ(a[1]->item_id, "a");
  }
  fixed.fixed_panel = {"e", "zz"};
  EXPECT_THROW(sample_anchors(pool, fixed, rng), MissingItem);
  fixed.fixed_panel = {"e"};
  EXPECT_THROW(sample_anchors(pool, fixed, rng), InvalidArgument);

  Rng r1(9), r2(9);
  for (int i = 0; i < 10; ++i) {
    const auto x = sample_anchors(pool, config(AnchorStrategy::Random, 4), r1);
    const auto y = sample_anchors(pool, config(AnchorStrategy::Random, 4), r2);
    EXPECT_EQ(x, y);
    EXPECT_EQ(std::set<const VidbEntry*>(x.begin(), x.end()).size(), 3u);
  }
  EXPECT_THROW(sample_anchors(pool, config(AnchorStrategy::Random, 7), r1), InvalidArgument);
}

TEST(AnchorPool, OnlyHoldsTheRequestedValue) {
  std::vector<VidbEntry> db = five_anchors();
  db.push_back(anchor("p", 1.0, "power"));
  const AnchorPool pool(db, "power");
  ASSERT_EQ(pool.entries().size(), 1u);
  EXPECT_EQ(pool.find("a"), nullptr);
  EXPECT_NE(pool.find("p"), nullptr);
}

// One-dimensional fit -------------------------------------------------------

RankingObservation obs(std::vector<ItemId> items) {
  RankingObservation r;
  r.items = std::move(items);
  return r;
}

TEST(SingleFree, SymmetricWinAndLossLandsOnTheAnchor) {
  const CalibratedScores pinned = {{"s", 2.75}};
  const std::vector<RankingObservation> rs = {obs({"r", "s"}), obs({"s", "r"})};
  EXPECT_NEAR(pl_fit_single_free(rs, pinned, "r"), 2.75, 1e-6);
}

TEST(SingleFreeProperty, MatchesGridSearchOverTheOracle) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    CalibratedScores pinned;
    std::vector<ItemId> ids;
    for (int i = 0; i < 5; ++i) {
      ids.push_back("a" + std::to_string(i));
      pinned[ids.back()] = normal(gen);
    }
    std::vector<RankingObservation> rs;
    for (int w = 0; w < 4; ++w) {
      std::vector<ItemId> items = {"r", ids[gen() % 5]};
      std::string other = ids[gen() % 5];
      if (other != items[1]) items.push_back(other);
      std::shuffle(items.begin(), items.end(), gen);
      rs.push_back(obs(items));
    }
    // Guarantee an interior optimum.
    rs.push_back(obs({"r", ids[0]}));
    rs.push_back(obs({ids[0], "r"}));
    double best_u = 0.0;
    long double best = -std::numeric_limits<long double>::infinity();
    for (double u = kFreeLower; u <= kFreeUpper; u += 1e-3) {
      UtilityVector theta(pinned.begin(), pinned.end());
      theta["r"] = u;
      long double total = 0.0L;
      for (const auto& r : rs) total += oracle::pl_log_probability(r, theta);
      if (total > best) {
        best = total;
        best_u = u;
      }
    }
    EXPECT_NEAR(pl_fit_single_free(rs, pinned, "r"), best_u, 2e-3) << trial;
  }
}

TEST(SingleFree, Rejects) {
  const CalibratedScores pinned = {{"s", 1.0}};
  EXPECT_THROW(pl_fit_single_free(std::vector<RankingObservation>{}, pinned, "r"), InvalidArgument);
  EXPECT_THROW(pl_fit_single_free(std::vector{obs({"r", "t"})}, pinned, "r"), MissingItem);
  EXPECT_THROW(pl_fit_single_free(std::vector{obs({"s", "s2"})}, {{"s", 1}, {"s2", 0}}, "r"),
               InvalidArgument);
}

// Local consistency ---------------------------------------------------------

TEST(LocalConsistency, LastEverywhereSitsJustBelowTheLowestAnchor) {
  const std::vector<VidbEntry> db = {anchor("a", -9.2), anchor("b", -1), anchor("c", 3)};
  const AnchorPool pool(db, "benevolence");
  const std::vector<RankingObservation> rs = {obs({"c", "b", "r"}), obs({"b", "a", "r"})};
  const auto est = estimate_from_rankings(rs, pool, "r", config(AnchorStrategy::Random, 3));
  EXPECT_TRUE(est.below_all);
  EXPECT_DOUBLE_EQ(est.intensity, -9.3);
  EXPECT_DOUBLE_EQ(est.anchor_min, -9.2);
}

TEST(LocalConsistency, ClampsToTheAnchorRange) {
  const std::vector<VidbEntry> db = {anchor("a", -2), anchor("b", 1), anchor("c", 8)};
  const AnchorPool pool(db, "benevolence");
  const std::vector<RankingObservation> rs = {obs({"r", "c", "b"}), obs({"r", "a", "c"})};
  const auto est = estimate_from_rankings(rs, pool, "r", config(AnchorStrategy::Random, 3));
  EXPECT_TRUE(est.clamped);
  EXPECT_FALSE(est.below_all);
  EXPECT_DOUBLE_EQ(est.intensity, 8.0);
  EXPECT_GT(est.raw_utility, 8.0);
  EXPECT_EQ(est.windows_used, 2);
}

TEST(LocalConsistencyProperty, IntensityAlwaysInsideTheScale) {
  const std::vector<VidbEntry> db = {anchor("a", -10), anchor("b", 0), anchor("c", 10)};
  const AnchorPool pool(db, "benevolence");
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RankingObservation> rs;
    for (int w = 0; w < 3; ++w) {
      std::vector<ItemId> items = {"r", "a", "b", "c"};
      std::shuffle(items.begin(), items.end(), gen);
      rs.push_back(obs(items));
    }
    const auto est = estimate_from_rankings(rs, pool, "r", config(AnchorStrategy::Random, 4));
    EXPECT_GE(est.intensity, -10.0);
    EXPECT_LE(est.intensity, 10.0);
  }
}

// End to end ----------------------------------------------------------------

TEST(EstimateIntensity, NoiselessJudgeBracketsTheResponse) {
  const auto db = five_anchors();
  NoiselessSetup setup(db, {{"she returns the wallet", 0.2}});
  auto c = config(AnchorStrategy::Fixed);
  c.fixed_panel = {"a", "b", "c", "d", "e"};
  const auto est = estimate_intensity("she returns the wallet", "benevolence", db, *setup.judge, c);
  EXPECT_GT(est.intensity, -4.0);
  EXPECT_LE(est.intensity, 0.5);
  EXPECT_EQ(est.windows_used, 3);
  EXPECT_TRUE(est.discards.empty());
}

TEST(EstimateIntensity, DeterministicAndPrefixConsistent) {
  const auto suite = testing::make_synthetic_suite(200, 4, 11);
  SimulatedJudge judge(testing::simulated_spec(1.0, 5), suite.truth);
  const AnchorPool pool(suite.anchors, suite.value);
  auto c = config(AnchorStrategy::Bucketed, 6, 5);
  const auto once = estimate_intensity(suite.responses[0], pool, judge, c);
  EXPECT_EQ(once.intensity, estimate_intensity(suite.responses[0], pool, judge, c).intensity);
  const std::vector<std::size_t> prefixes = {2, 5, 9};
  const auto many = estimate_intensity_prefixes(suite.responses[0], pool, judge, c, prefixes);
  EXPECT_EQ(many[1].intensity, once.intensity);
  c.iterations = 2;
  EXPECT_EQ(many[0].intensity, estimate_intensity(suite.responses[0], pool, judge, c).intensity);
  EXPECT_EQ(many[2].windows_used, 9);
}

TEST(EstimateIntensity, EveryWindowDiscardedFails) {
  const auto db = five_anchors();
  ScriptedJudge judge("broken");
  judge.on_rank = [](const WindowPrompt&, std::size_t) -> RankingObservation {
    throw WindowDiscarded("gibberish");
  };
  EXPECT_THROW(estimate_intensity("text", "benevolence", db, judge, config(AnchorStrategy::Random)),
               EvaluationFailed);
  EXPECT_EQ(judge.calls.load(), 3);
  EXPECT_THROW(estimate_intensity("  ", "benevolence", db, judge, config(AnchorStrategy::Random)),
               InvalidArgument);
}

TEST(EstimateIntensity, PartialDiscardsAreReported) {
  const auto db = five_anchors();
  NoiselessSetup setup(db, {{"text", 1.0}});
  ScriptedJudge judge("flaky");
  judge.on_rank = [&](const WindowPrompt& w, std::size_t i) {
    if (i == 1) throw JudgeUnavailable("timeout");
    return setup.judge->rank(w, i);
  };
  const auto est = estimate_intensity("text", "benevolence", db, judge, config(AnchorStrategy::Random));
  EXPECT_EQ(est.windows_used, 2);
  ASSERT_EQ(est.discards.size(), 1u);
  EXPECT_EQ(est.discards[0].window_index, 1u);
}

TEST(SteeringGain, IdenticalTextsGiveZero) {
  const auto db = five_anchors();
  NoiselessSetup setup(db, {{"same", 1.7}}, 1.0);
  const AnchorPool pool(db, "benevolence");
  const auto gain = steering_gain("same", "same", pool, *setup.judge, config(AnchorStrategy::Bucketed));
  EXPECT_EQ(gain.delta, 0.0);
}

TEST(SteeringGainProperty, MonotoneInSteeredUtility) {
  const auto suite = testing::make_synthetic_suite(300, 0, 4);
  const AnchorPool pool(suite.anchors, suite.value);
  auto truth = std::make_shared<SimulatedTruth>(*suite.truth);
  std::vector<std::string> steered;
  truth->utilities[response_item_id("base")] = -6.0;
  for (int i = 0; i < 6; ++i) {
    steered.push_back("steered " + std::to_string(i));
    truth->utilities[response_item_id(steered.back())] = -5.0 + 2.5 * i;
  }
  SimulatedJudge judge(testing::simulated_spec(0.0, 1), truth);
  auto c = config(AnchorStrategy::Bucketed, 6, 10);
  double previous = -std::numeric_limits<double>::infinity();
  for (const auto& s : steered) {
    const double delta = steering_gain("base", s, pool, judge, c).delta;
    EXPECT_GT(delta, previous) << s;
    previous = delta;
  }
}

TEST(EvaluateBatch, ReportsFailuresWithoutThrowing) {
  const auto db = five_anchors();
  NoiselessSetup setup(db, {{"one", 1.0}, {"two", -2.0}});
  const std::vector<EvaluationRequest> requests = {
      {"r1", "one", "benevolence"}, {"r2", "two", "power"}, {"r3", "two", "benevolence"}};
  const auto out = evaluate_batch(requests, db, *setup.judge, config(AnchorStrategy::Random));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_TRUE(out[0].estimate);
  EXPECT_FALSE(out[1].estimate);
  EXPECT_NE(out[1].error.find("fewer than k-1"), std::string::npos);
  EXPECT_TRUE(out[2].estimate);
  EXPECT_GT(out[0].estimate->intensity, out[2].estimate->intensity);
}

TEST(AnchorStrategyNames, RoundTrip) {
  for (auto s : {AnchorStrategy::Random, AnchorStrategy::Bucketed, AnchorStrategy::Fixed}) {
    EXPECT_EQ(parse_anchor_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_anchor_strategy("stratified"), InvalidArgument);
}

}  // namespace
}  // namespace valuerank
