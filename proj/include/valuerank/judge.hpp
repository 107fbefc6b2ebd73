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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valuerank/prompts.hpp"
#include "valuerank/ranking.hpp"

namespace valuerank {

enum class JudgeKind { Simulated, HttpChat };

struct JudgeSpec {
  JudgeKind kind = JudgeKind::Simulated;
  /// Defaults to model_name for HTTP judges and "simulated-<seed>" otherwise.
  std::optional<std::string> name;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::optional<std::string> api_key_env_var;
  double temperature = 0.0;
  int max_retries = 3;
  int max_in_flight = 8;
  int backoff_initial_ms = 200;
  int timeout_seconds = 60;

  // Simulated judges only.
  double noise_scale = 1.0;  ///< Gumbel scale for rankings, normal sd for ratings.
  std::uint64_t rng_seed = 0;
  double bias = 0.0;         ///< Additive shift applied to every utility.
  double error_rate = 0.0;   ///< Chance of a wrong categorical answer.

  std::string judge_id() const;
  void validate() const;
};

/// Ground truth consulted by simulated judges.
struct SimulatedTruth {
  UtilityVector utilities;
  /// Text -> root-to-leaf label path.
  std::map<std::string, std::vector<std::string>> label_paths;
  /// Text -> direction in {-1, 0, +1}.
  std::map<std::string, int> directions;
};

/// A model (or oracle) that answers the pipeline's judging tasks.
///
/// Implementations must be safe to call concurrently.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string id() const = 0;
  virtual std::size_t max_in_flight() const { return 8; }

  /// Total order over the window's items, best first.
  virtual RankingObservation rank(const WindowPrompt& window, std::size_t window_index) = 0;
  /// 1 when the rating is plausible, 0 when problematic.
  virtual int plausibility(const FlagPrompt& prompt) = 0;
  /// A child name or kNeutralCategory.
  virtual std::string categorize(const CategoryPrompt& prompt) = 0;
  virtual int direction(const DirectionPrompt& prompt) = 0;
  virtual double rate(const RatingPrompt& prompt) = 0;
};

/// Gumbel-perturbed sort of the true utilities, which samples exactly from the
/// Plackett-Luce model. Draws depend only on the seed, the judge and the
/// window's identity, so results do not depend on call order or threading.
class SimulatedJudge final : public Judge {
 public:
  SimulatedJudge(JudgeSpec spec, std::shared_ptr<const SimulatedTruth> truth);

  std::string id() const override { return spec_.judge_id(); }
  std::size_t max_in_flight() const override;
  RankingObservation rank(const WindowPrompt& window, std::size_t window_index) override;
  int plausibility(const FlagPrompt& prompt) override;
  std::string categorize(const CategoryPrompt& prompt) override;
  int direction(const DirectionPrompt& prompt) override;
  double rate(const RatingPrompt& prompt) override;

  const JudgeSpec& spec() const { return spec_; }

 private:
  double truth_of(const ItemId& id) const;

  JudgeSpec spec_;
  std::shared_ptr<const SimulatedTruth> truth_;
};

/// Raw transport used by HttpChatJudge; returns (status, body) or throws on
/// connection failure. Replaceable in tests.
struct HttpResponse {
  int status = 0;
  std::string body;
};
using HttpPost = std::function<HttpResponse(const std::string& url, const std::string& body,
                                            const std::string& bearer_token, int timeout_seconds)>;

/// Default transport built on cpp-httplib.
HttpResponse httplib_post(const std::string& url, const std::string& body,
                          const std::string& bearer_token, int timeout_seconds);

/// Judge backed by an OpenAI-compatible chat-completions endpoint.
class HttpChatJudge final : public Judge {
 public:
  explicit HttpChatJudge(JudgeSpec spec, HttpPost transport = httplib_post);
  ~HttpChatJudge() override;

  std::string id() const override { return spec_.judge_id(); }
  std::size_t max_in_flight() const override;
  RankingObservation rank(const WindowPrompt& window, std::size_t window_index) override;
  int plausibility(const FlagPrompt& prompt) override;
  std::string categorize(const CategoryPrompt& prompt) override;
  int direction(const DirectionPrompt& prompt) override;
  double rate(const RatingPrompt& prompt) override;

  /// Sends one chat request with transport retries; returns the reply text.
  std::string complete(const std::string& prompt);

  /// Builds the JSON request body for a single user message.
  std::string request_body(const std::string& prompt) const;

 private:
  template <class Parse>
  auto ask(const std::string& prompt, Parse parse) -> decltype(parse(std::string_view{}));

  JudgeSpec spec_;
  HttpPost transport_;
  std::string url_;
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

/// Judge factory; simulated judges need `truth`.
std::unique_ptr<Judge> make_judge(const JudgeSpec& spec,
                                  std::shared_ptr<const SimulatedTruth> truth = nullptr);

/// Reads a judge roster: a JSON document {"judges": [{...JudgeSpec fields...}]}
/// or a bare JSON array of specs.
std::vector<JudgeSpec> load_judge_roster(const std::filesystem::path& path);
std::vector<JudgeSpec> parse_judge_roster(const std::string& json_text);
std::string judge_spec_to_json(const JudgeSpec& spec);

/// Single-call forms of the two ranking paths.
RankingObservation simulated_rank(const WindowPrompt& window, const UtilityVector& true_utilities,
                                  const JudgeSpec& spec, std::size_t window_index = 0);
RankingObservation http_rank(const WindowPrompt& window, const JudgeSpec& spec,
                             std::size_t window_index = 0);

/// A window tagged with its identity.
struct IndexedWindow {
  std::size_t window_index = 0;
  WindowPrompt prompt;
  /// The text the window was built around, when there is one.
  ItemId focal;
};

struct DiscardEvent {
  std::size_t window_index = 0;
  std::string judge_id;
  std::string reason;
};

struct RankingCollection {
  /// Ordered by (window_index, judge position in the roster).
  std::vector<RankingObservation> observations;
  std::vector<DiscardEvent> discards;
};

/// Poses every window to every judge with bounded parallelism.
RankingCollection collect_rankings(std::span<const IndexedWindow> windows,
                                   std::span<Judge* const> judges);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace valuerank
