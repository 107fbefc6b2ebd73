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

#include "valuerank/judge.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "valuerank/errors.hpp"

namespace valuerank {

using nlohmann::json;

std::string JudgeSpec::judge_id() const {
  if (name) return *name;
  if (kind == JudgeKind::HttpChat && model_name) return *model_name;
  return "simulated-" + std::to_string(rng_seed);
}

void JudgeSpec::validate() const {
  if (kind == JudgeKind::HttpChat && (!endpoint_url || !model_name)) {
    throw InvalidArgument("HttpChat judge requires endpoint_url and model_name");
  }
  if (temperature < 0.0) throw InvalidArgument("temperature must be >= 0");
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  if (noise_scale < 0.0) throw InvalidArgument("noise_scale must be >= 0");
  if (error_rate < 0.0 || error_rate > 1.0) throw InvalidArgument("error_rate must lie in [0, 1]");
}

namespace {

JudgeSpec spec_from_json(const json& j) {
  JudgeSpec spec;
  const std::string kind = j.value("kind", std::string("simulated"));
  if (kind == "simulated" || kind == "Simulated") {
    spec.kind = JudgeKind::Simulated;
  } else if (kind == "http_chat" || kind == "HttpChat" || kind == "http") {
    spec.kind = JudgeKind::HttpChat;
  } else {
    throw InvalidArgument("unknown judge kind: " + kind);
  }
  auto opt = [&](const char* key, std::optional<std::string>& field) {
    if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<std::string>();
  };
  opt("name", spec.name);
  opt("endpoint_url", spec.endpoint_url);
  opt("model_name", spec.model_name);
  opt("api_key_env_var", spec.api_key_env_var);
  spec.temperature = j.value("temperature", spec.temperature);
  spec.max_retries = j.value("max_retries", spec.max_retries);
  spec.max_in_flight = j.value("max_in_flight", spec.max_in_flight);
  spec.backoff_initial_ms = j.value("backoff_initial_ms", spec.backoff_initial_ms);
  spec.timeout_seconds = j.value("timeout_seconds", spec.timeout_seconds);
  spec.noise_scale = j.value("noise_scale", spec.noise_scale);
  spec.rng_seed = j.value("rng_seed", spec.rng_seed);
  spec.bias = j.value("bias", spec.bias);
  spec.error_rate = j.value("error_rate", spec.error_rate);
  spec.validate();
  return spec;
}

}  // namespace

std::vector<JudgeSpec> parse_judge_roster(const std::string& json_text) {
  const json doc = json::parse(json_text);
  const json& list = doc.is_array() ? doc : doc.at("judges");
  std::vector<JudgeSpec> out;
  for (const auto& item : list) out.push_back(spec_from_json(item));
  if (out.empty()) throw InvalidArgument("judge roster is empty");
  return out;
}

std::vector<JudgeSpec> load_judge_roster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open judge roster: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_judge_roster(buf.str());
}

std::string judge_spec_to_json(const JudgeSpec& spec) {
  json j;
  j["kind"] = spec.kind == JudgeKind::Simulated ? "simulated" : "http_chat";
  j["name"] = spec.judge_id();
  if (spec.endpoint_url) j["endpoint_url"] = *spec.endpoint_url;
  if (spec.model_name) j["model_name"] = *spec.model_name;
  if (spec.api_key_env_var) j["api_key_env_var"] = *spec.api_key_env_var;
  j["temperature"] = spec.temperature;
  j["max_retries"] = spec.max_retries;
  j["max_in_flight"] = spec.max_in_flight;
  if (spec.kind == JudgeKind::Simulated) {
    j["noise_scale"] = spec.noise_scale;
    j["rng_seed"] = spec.rng_seed;
    j["bias"] = spec.bias;
    j["error_rate"] = spec.error_rate;
  }
  return j.dump();
}

std::unique_ptr<Judge> make_judge(const JudgeSpec& spec,
                                  std::shared_ptr<const SimulatedTruth> truth) {
  spec.validate();
  if (spec.kind == JudgeKind::HttpChat) return std::make_unique<HttpChatJudge>(spec);
  if (!truth) throw InvalidArgument("simulated judge requires ground truth");
  return std::make_unique<SimulatedJudge>(spec, std::move(truth));
}

RankingObservation simulated_rank(const WindowPrompt& window, const UtilityVector& true_utilities,
                                  const JudgeSpec& spec, std::size_t window_index) {
  auto truth = std::make_shared<SimulatedTruth>();
  truth->utilities = true_utilities;
  return SimulatedJudge(spec, truth).rank(window, window_index);
}

RankingObservation http_rank(const WindowPrompt& window, const JudgeSpec& spec,
                             std::size_t window_index) {
  return HttpChatJudge(spec).rank(window, window_index);
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

RankingCollection collect_rankings(std::span<const IndexedWindow> windows,
                                   std::span<Judge* const> judges) {
  if (judges.empty()) throw InvalidArgument("collect_rankings requires at least one judge");
  const std::size_t tasks = windows.size() * judges.size();
  std::vector<std::optional<RankingObservation>> results(tasks);
  std::vector<std::optional<DiscardEvent>> failures(tasks);

  std::size_t workers = 0;
  for (const Judge* judge : judges) workers += judge->max_in_flight();

  parallel_for(tasks, workers, [&](std::size_t t) {
    const auto& window = windows[t / judges.size()];
    Judge* judge = judges[t % judges.size()];
    try {
      results[t] = judge->rank(window.prompt, window.window_index);
    } catch (const WindowDiscarded& e) {
      failures[t] = DiscardEvent{window.window_index, judge->id(), std::string("malformed: ") + e.what()};
    } catch (const MalformedVerdict& e) {
      failures[t] = DiscardEvent{window.window_index, judge->id(), std::string("malformed: ") + e.what()};
    } catch (const JudgeUnavailable& e) {
      failures[t] = DiscardEvent{window.window_index, judge->id(), std::string("unavailable: ") + e.what()};
    }
  });

  RankingCollection out;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (results[t]) out.observations.push_back(std::move(*results[t]));
    if (failures[t]) out.discards.push_back(std::move(*failures[t]));
  }
  return out;
}

}  // namespace valuerank
