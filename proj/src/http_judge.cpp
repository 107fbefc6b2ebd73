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

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/judge.hpp"

namespace valuerank {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string chat_url(const std::string& endpoint) {
  constexpr std::string_view kSuffix = "/chat/completions";
  std::string base = endpoint;
  if (base.size() >= kSuffix.size() &&
      base.compare(base.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
    return base;
  }
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + std::string(kSuffix);
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpResponse httplib_post(const std::string& url, const std::string& body,
                          const std::string& bearer_token, int timeout_seconds) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) throw std::runtime_error("transport error: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

// Limits concurrent requests to one endpoint.
struct HttpChatJudge::Gate {
  explicit Gate(int permits) : semaphore(permits) {}
  std::counting_semaphore<1024> semaphore;
};

HttpChatJudge::HttpChatJudge(JudgeSpec spec, HttpPost transport)
    : spec_(std::move(spec)), transport_(std::move(transport)) {
  if (spec_.kind != JudgeKind::HttpChat) throw InvalidArgument("HttpChatJudge needs an HttpChat spec");
  spec_.validate();
  url_ = chat_url(*spec_.endpoint_url);
  gate_ = std::make_unique<Gate>(std::min(spec_.max_in_flight, 1024));
}

HttpChatJudge::~HttpChatJudge() = default;

std::size_t HttpChatJudge::max_in_flight() const {
  return static_cast<std::size_t>(spec_.max_in_flight);
}

std::string HttpChatJudge::request_body(const std::string& prompt) const {
  json body;
  body["model"] = *spec_.model_name;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = spec_.temperature;
  return body.dump();
}

std::string HttpChatJudge::complete(const std::string& prompt) {
  std::string token;
  if (spec_.api_key_env_var) {
    if (const char* value = std::getenv(spec_.api_key_env_var->c_str())) token = value;
  }
  const std::string body = request_body(prompt);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(
          static_cast<long long>(spec_.backoff_initial_ms) << std::min(attempt - 1, 16));
      std::this_thread::sleep_for(delay);
    }
    HttpResponse response;
    try {
      gate_->semaphore.acquire();
      struct Release {
        Gate* gate;
        ~Release() { gate->semaphore.release(); }
      } release{gate_.get()};
      response = transport_(url_, body, token, spec_.timeout_seconds);
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }
    if (response.status == 200) {
      try {
        const json reply = json::parse(response.body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw MalformedVerdict(std::string("unexpected chat-completion payload: ") + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(response.status);
    if (!retryable(response.status)) break;
  }
  throw JudgeUnavailable(id() + ": " + last_error);
}

template <class Parse>
auto HttpChatJudge::ask(const std::string& prompt, Parse parse)
    -> decltype(parse(std::string_view{})) {
  std::string last_error;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    try {
      const std::string reply = complete(prompt);
      return parse(reply);
    } catch (const MalformedVerdict& e) {
      last_error = e.what();
    }
  }
  throw WindowDiscarded(id() + ": " + last_error);
}

RankingObservation HttpChatJudge::rank(const WindowPrompt& window, std::size_t window_index) {
  const std::string prompt = render_prompt(window);
  RankingObservation obs;
  obs.judge_id = id();
  obs.window_index = window_index;
  if (window.format == PromptFormat::Binary) {
    const int winner = ask(prompt, [](std::string_view r) { return parse_binary_verdict(r); });
    const std::size_t w = static_cast<std::size_t>(winner - 1);
    obs.items = {window.texts[w].item, window.texts[1 - w].item};
  } else {
    const std::size_t k = window.texts.size();
    const auto order = ask(prompt, [k](std::string_view r) { return parse_order_verdict(r, k); });
    for (int slot : order) obs.items.push_back(window.texts[static_cast<std::size_t>(slot - 1)].item);
  }
  return obs;
}

int HttpChatJudge::plausibility(const FlagPrompt& prompt) {
  return ask(render_flag_prompt(prompt), [](std::string_view r) { return parse_flag_verdict(r); });
}

std::string HttpChatJudge::categorize(const CategoryPrompt& prompt) {
  return ask(render_category_prompt(prompt), [&](std::string_view r) {
    return parse_category_verdict(r, prompt.children, prompt.offer_neutral);
  });
}

int HttpChatJudge::direction(const DirectionPrompt& prompt) {
  return ask(render_direction_prompt(prompt),
             [](std::string_view r) { return parse_direction_verdict(r); });
}

double HttpChatJudge::rate(const RatingPrompt& prompt) {
  return ask(render_rating_prompt(prompt), [](std::string_view r) { return parse_rating_verdict(r); });
}

}  // namespace valuerank
