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

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/prompts.hpp"
#include "valuerank/ranking.hpp"

namespace valuerank {
namespace {

using nlohmann::json;

WindowPrompt window(std::vector<std::pair<ItemId, std::string>> slots,
                    PromptFormat format = PromptFormat::Binary) {
  WindowPrompt w;
  w.value_name = "Benevolence";
  w.value_definition = "preserving and enhancing the welfare of close others";
  w.format = format;
  for (auto& [id, text] : slots) w.texts.push_back({id, text});
  return w;
}

// Prompts -----------------------------------------------------------------------

TEST(RenderPrompt, BinaryKeepsSlotOrder) {
  const std::string p = render_prompt(window({{"a", "T1"}, {"b", "T2"}}));
  EXPECT_NE(p.find("Below are the two texts"), std::string::npos);
  EXPECT_NE(p.find("Benevolence"), std::string::npos);
  EXPECT_NE(p.find("welfare of close others"), std::string::npos);
  EXPECT_LT(p.find("[1] T1"), p.find("[2] T2"));
  const std::string swapped = render_prompt(window({{"b", "T2"}, {"a", "T1"}}));
  EXPECT_LT(swapped.find("[1] T2"), swapped.find("[2] T1"));
}

TEST(RenderPrompt, DefaultEnumeratesEveryText) {
  const std::string p = render_prompt(window(
      {{"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "D"}, {"e", "E"}}, PromptFormat::Default));
  for (int i = 1; i <= 5; ++i) EXPECT_NE(p.find("[" + std::to_string(i) + "] "), std::string::npos);
  EXPECT_EQ(p.find("[6] "), std::string::npos);
}

TEST(RenderPrompt, ValidatesWindow) {
  EXPECT_THROW(render_prompt(window({{"a", "A"}, {"b", "B"}, {"c", "C"}})), InvalidArgument);
  EXPECT_THROW(render_prompt(window({{"a", "A"}}, PromptFormat::Default)), InvalidArgument);
  EXPECT_THROW(render_prompt(window({{"a", "A"}, {"a", "B"}})), InvalidArgument);
}

TEST(ParseVerdict, Binary) {
  EXPECT_EQ(parse_binary_verdict("1\nReason: more caring"), 1);
  EXPECT_EQ(parse_binary_verdict("  2  "), 2);
  EXPECT_EQ(parse_binary_verdict("**2**\nReason: x"), 2);
  EXPECT_THROW(parse_binary_verdict("both are equal"), MalformedVerdict);
  EXPECT_THROW(parse_binary_verdict("12"), MalformedVerdict);
  EXPECT_THROW(parse_binary_verdict(""), MalformedVerdict);
}

TEST(ParseVerdict, Order) {
  EXPECT_EQ(parse_order_verdict("Ranking: 3, 1, 5, 2, 4", 5), (std::vector<int>{3, 1, 5, 2, 4}));
  EXPECT_EQ(parse_order_verdict("Here you go\n2 > 1 > 3", 3), (std::vector<int>{2, 1, 3}));
  EXPECT_THROW(parse_order_verdict("Ranking: 1, 1, 2", 3), MalformedVerdict);
  EXPECT_THROW(parse_order_verdict("Ranking: 1, 2", 3), MalformedVerdict);
  EXPECT_THROW(parse_order_verdict("Ranking: 1, 2, 4", 3), MalformedVerdict);
}

TEST(ParseVerdict, OtherTasks) {
  EXPECT_EQ(parse_flag_verdict("0"), 0);
  EXPECT_EQ(parse_flag_verdict("(1)"), 1);
  EXPECT_THROW(parse_flag_verdict("maybe"), MalformedVerdict);
  const std::vector<std::string> children = {"Care", "Fairness"};
  EXPECT_EQ(parse_category_verdict("Selected: care", children, false), "Care");
  EXPECT_EQ(parse_category_verdict("Selected: None", children, true), kNeutralCategory);
  EXPECT_THROW(parse_category_verdict("Selected: None", children, false), MalformedVerdict);
  EXPECT_EQ(parse_direction_verdict("Answer: supports"), 1);
  EXPECT_EQ(parse_direction_verdict("Answer: not related"), 0);
  EXPECT_EQ(parse_direction_verdict("opposes"), -1);
  EXPECT_THROW(parse_direction_verdict("Answer: unclear"), MalformedVerdict);
  EXPECT_EQ(parse_rating_verdict("Rating: -7.5"), -7.5);
  EXPECT_THROW(parse_rating_verdict("Rating: 11"), MalformedVerdict);
}

// Simulated judge -----------------------------------------------------------------

JudgeSpec simulated(double noise, std::uint64_t seed) {
  JudgeSpec spec;
  spec.noise_scale = noise;
  spec.rng_seed = seed;
  return spec;
}

TEST(SimulatedRank, NoiselessSortsByUtility) {
  const UtilityVector truth = {{"a", 2}, {"b", 1}};
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(simulated_rank(window({{"b", "B"}, {"a", "A"}}), truth, simulated(0, i), i).items,
              (std::vector<ItemId>{"a", "b"}));
  }
  const UtilityVector tied = {{"a", 0}, {"b", 0}};
  EXPECT_EQ(simulated_rank(window({{"b", "B"}, {"a", "A"}}), tied, simulated(0, 1)).items,
            (std::vector<ItemId>{"a", "b"}));
}

TEST(SimulatedRank, DeterministicAndClosedOverWindowItems) {
  const UtilityVector truth = {{"a", 0.1}, {"b", -0.3}, {"c", 0.4}};
  const auto w = window({{"a", "A"}, {"b", "B"}, {"c", "C"}}, PromptFormat::Default);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto r1 = simulated_rank(w, truth, simulated(1, 9), i);
    const auto r2 = simulated_rank(w, truth, simulated(1, 9), i);
    EXPECT_EQ(r1, r2);
    r1.validate();
    for (const auto& id : r1.items) EXPECT_TRUE(truth.contains(id));
  }
  EXPECT_THROW(simulated_rank(window({{"a", "A"}, {"zz", "Z"}}), truth, simulated(1, 9)), MissingItem);
}

TEST(SimulatedRankProperty, UniformOverOrdersForEqualUtilities) {
  const UtilityVector truth = {{"a", 0.7}, {"b", 0.7}, {"c", 0.7}};
  const auto w = window({{"a", "A"}, {"b", "B"}, {"c", "C"}}, PromptFormat::Default);
  SimulatedJudge judge(simulated(1, 21), std::make_shared<SimulatedTruth>(SimulatedTruth{truth, {}, {}}));
  std::map<std::vector<ItemId>, int> counts;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[judge.rank(w, static_cast<std::size_t>(i)).items];
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0.0;
  const double expected = kDraws / 6.0;
  for (const auto& [order, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 15.086);  // 5 degrees of freedom, p = 0.01
}

TEST(SimulatedRankProperty, MatchesPlackettLuceFrequencies) {
  const UtilityVector truth = {{"a", 1.0}, {"b", 0.2}, {"c", -0.6}};
  const auto w = window({{"c", "C"}, {"a", "A"}, {"b", "B"}}, PromptFormat::Default);
  SimulatedJudge judge(simulated(1, 4), std::make_shared<SimulatedTruth>(SimulatedTruth{truth, {}, {}}));
  std::map<std::vector<ItemId>, int> counts;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[judge.rank(w, static_cast<std::size_t>(i)).items];
  for (const auto& [order, n] : counts) {
    RankingObservation r;
    r.items = order;
    EXPECT_NEAR(static_cast<double>(n) / kDraws, std::exp(pl_log_probability(r, truth)), 0.01);
  }
}

TEST(SimulatedRankProperty, PairFrequencyMatchesBradleyTerryAndIsPositionFree) {
  const UtilityVector truth = {{"a", 0.8}, {"b", 0.0}};
  SimulatedJudge judge(simulated(1, 8), std::make_shared<SimulatedTruth>(SimulatedTruth{truth, {}, {}}));
  constexpr int kDraws = 100000;
  int a_first = 0;
  int slot1_wins = 0;
  for (int i = 0; i < kDraws; ++i) {
    const bool swap = i % 2 == 1;
    const auto w = swap ? window({{"b", "B"}, {"a", "A"}}) : window({{"a", "A"}, {"b", "B"}});
    const auto r = judge.rank(w, static_cast<std::size_t>(i));
    if (r.items[0] == "a") ++a_first;
    if (r.items[0] == w.texts[0].item) ++slot1_wins;
  }
  EXPECT_NEAR(static_cast<double>(a_first) / kDraws, bt_pairwise_probability(0.8, 0.0), 0.01);
  EXPECT_NEAR(static_cast<double>(slot1_wins) / kDraws, 0.5, 0.01);
}

TEST(SimulatedJudge, OtherTasksFollowTruth) {
  auto truth = std::make_shared<SimulatedTruth>();
  truth->utilities = {{"x", 4.0}};
  truth->label_paths = {{"some text", {"Care", "Kindness"}}};
  truth->directions = {{"some text", -1}};
  SimulatedJudge judge(simulated(0, 1), truth);
  EXPECT_EQ(judge.plausibility({"x", "def", "some text", 4.0}), 1);
  EXPECT_EQ(judge.categorize({"root", "", {"Fairness", "Care"}, "some text", false}), "Care");
  EXPECT_EQ(judge.categorize({"Care", "", {"Kindness", "Compassion"}, "some text", true}), "Kindness");
  EXPECT_EQ(judge.categorize({"Kindness", "", {"Warmth", "Pity"}, "some text", true}), kNeutralCategory);
  EXPECT_EQ(judge.direction({"", "Care", "", "some text"}), -1);
  EXPECT_EQ(judge.rate({"x", "v", "", "some text"}), 4.0);
}

TEST(JudgeSpec, ValidationAndRoster) {
  JudgeSpec http;
  http.kind = JudgeKind::HttpChat;
  EXPECT_THROW(http.validate(), InvalidArgument);
  http.endpoint_url = "http://localhost:1/v1";
  http.model_name = "m";
  EXPECT_NO_THROW(http.validate());
  EXPECT_EQ(http.judge_id(), "m");

  const auto roster = parse_judge_roster(R"({"judges": [
    {"kind": "simulated", "noise_scale": 0.5, "rng_seed": 3, "bias": -1},
    {"kind": "http_chat", "endpoint_url": "http://h/v1", "model_name": "gemma", "max_retries": 1}]})");
  ASSERT_EQ(roster.size(), 2u);
  EXPECT_EQ(roster[0].noise_scale, 0.5);
  EXPECT_EQ(roster[0].bias, -1.0);
  EXPECT_EQ(roster[1].kind, JudgeKind::HttpChat);
  EXPECT_EQ(roster[1].max_retries, 1);
  EXPECT_EQ(parse_judge_roster(judge_spec_to_json(roster[0]).insert(0, "[").append("]"))[0].rng_seed, 3u);
  EXPECT_THROW(parse_judge_roster(R"([{"kind": "oracle"}])"), InvalidArgument);
}

// HTTP judge ------------------------------------------------------------------------

JudgeSpec http_spec(int retries = 3) {
  JudgeSpec spec;
  spec.kind = JudgeKind::HttpChat;
  spec.endpoint_url = "http://judge.invalid/v1";
  spec.model_name = "mock-model";
  spec.max_retries = retries;
  spec.backoff_initial_ms = 1;
  return spec;
}

std::string chat_reply(const std::string& content) {
  return json{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

TEST(HttpJudge, BinaryReplyMapsToSlots) {
  HttpChatJudge judge(http_spec(), [](const std::string&, const std::string&, const std::string&, int) {
    return HttpResponse{200, chat_reply("1\nReason: kinder")};
  });
  const auto r = judge.rank(window({{"a", "A"}, {"b", "B"}}), 7);
  EXPECT_EQ(r.items, (std::vector<ItemId>{"a", "b"}));
  EXPECT_EQ(r.judge_id, "mock-model");
  EXPECT_EQ(r.window_index, 7u);
}

TEST(HttpJudge, OrderReply) {
  HttpChatJudge judge(http_spec(), [](const std::string&, const std::string&, const std::string&, int) {
    return HttpResponse{200, chat_reply("Ranking: 5, 3, 1, 2, 4")};
  });
  const auto r = judge.rank(
      window({{"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "D"}, {"e", "E"}}, PromptFormat::Default), 0);
  EXPECT_EQ(r.items, (std::vector<ItemId>{"e", "c", "a", "b", "d"}));
}

TEST(HttpJudge, ServerErrorsExhaustRetries) {
  std::atomic<int> calls{0};
  HttpChatJudge judge(http_spec(2), [&](const std::string&, const std::string&, const std::string&, int) {
    ++calls;
    return HttpResponse{500, "oops"};
  });
  EXPECT_THROW(judge.rank(window({{"a", "A"}, {"b", "B"}}), 0), JudgeUnavailable);
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpJudge, RetriesTransientFailuresOnly) {
  std::atomic<int> calls{0};
  HttpChatJudge judge(http_spec(3), [&](const std::string&, const std::string&, const std::string&, int) {
    const int n = ++calls;
    if (n == 1) throw std::runtime_error("connection reset");
    if (n == 2) return HttpResponse{429, "slow down"};
    return HttpResponse{200, chat_reply("2")};
  });
  EXPECT_EQ(judge.rank(window({{"a", "A"}, {"b", "B"}}), 0).items, (std::vector<ItemId>{"b", "a"}));
  EXPECT_EQ(calls.load(), 3);

  std::atomic<int> rejected{0};
  HttpChatJudge strict(http_spec(3), [&](const std::string&, const std::string&, const std::string&, int) {
    ++rejected;
    return HttpResponse{401, "bad key"};
  });
  EXPECT_THROW(strict.rank(window({{"a", "A"}, {"b", "B"}}), 0), JudgeUnavailable);
  EXPECT_EQ(rejected.load(), 1);
}

TEST(HttpJudge, MalformedRepliesDiscardTheWindow) {
  std::atomic<int> calls{0};
  HttpChatJudge judge(http_spec(2), [&](const std::string&, const std::string&, const std::string&, int) {
    ++calls;
    return HttpResponse{200, chat_reply("both are equal")};
  });
  EXPECT_THROW(judge.rank(window({{"a", "A"}, {"b", "B"}}), 0), WindowDiscarded);
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpJudge, BoundsRequestsInFlight) {
  JudgeSpec spec = http_spec();
  spec.max_in_flight = 2;
  std::atomic<int> active{0}, peak{0};
  HttpChatJudge judge(spec, [&](const std::string&, const std::string&, const std::string&, int) {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return HttpResponse{200, chat_reply("1")};
  });
  parallel_for(24, 8, [&](std::size_t i) { judge.rank(window({{"a", "A"}, {"b", "B"}}), i); });
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(HttpJudge, TalksToAnOpenAiCompatibleServer) {
  httplib::Server server;
  std::mutex mutex;
  json seen_body;
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex);
    seen_body = json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(chat_reply("Selected: Fairness"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("VALUERANK_TEST_KEY", "sk-test", 1);
  JudgeSpec spec = http_spec();
  spec.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  spec.api_key_env_var = "VALUERANK_TEST_KEY";
  spec.temperature = 0.0;
  HttpChatJudge judge(spec);
  EXPECT_EQ(judge.categorize({"Moral", "", {"Care", "Fairness"}, "split it evenly", false}), "Fairness");
  server.stop();
  thread.join();

  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(seen_body.at("model"), "mock-model");
  EXPECT_EQ(seen_body.at("temperature"), 0.0);
  ASSERT_EQ(seen_body.at("messages").size(), 1u);
  EXPECT_EQ(seen_body.at("messages")[0].at("role"), "user");
  EXPECT_NE(seen_body.at("messages")[0].at("content").get<std::string>().find("split it evenly"),
            std::string::npos);
}

TEST(HttpJudge, UnreachableEndpointIsUnavailable) {
  JudgeSpec spec = http_spec(1);
  spec.endpoint_url = "http://127.0.0.1:1/v1";
  spec.timeout_seconds = 1;
  EXPECT_THROW(http_rank(window({{"a", "A"}, {"b", "B"}}), spec), JudgeUnavailable);
}

// Collection ------------------------------------------------------------------------

TEST(CollectRankings, OrderedByWindowThenJudgeAndRecordsDiscards) {
  auto truth = std::make_shared<SimulatedTruth>();
  truth->utilities = {{"a", 1}, {"b", 0}};
  SimulatedJudge good(simulated(1, 1), truth);
  HttpChatJudge bad(http_spec(0), [](const std::string&, const std::string&, const std::string&, int) {
    return HttpResponse{200, chat_reply("no idea")};
  });
  std::vector<IndexedWindow> windows;
  for (std::size_t i = 0; i < 10; ++i) windows.push_back({i, window({{"a", "A"}, {"b", "B"}}), "a"});
  Judge* judges[] = {&good, &bad};
  const auto c = collect_rankings(windows, judges);
  ASSERT_EQ(c.observations.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(c.observations[i].window_index, i);
  ASSERT_EQ(c.discards.size(), 10u);
  EXPECT_EQ(c.discards[3].judge_id, "mock-model");
  EXPECT_EQ(c.discards[3].window_index, 3u);
}

}  // namespace
}  // namespace valuerank
