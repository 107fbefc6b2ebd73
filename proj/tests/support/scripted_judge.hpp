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

#include <atomic>
#include <functional>
#include <stdexcept>
#include <string>

#include "valuerank/errors.hpp"
#include "valuerank/judge.hpp"

namespace valuerank::testing {

/// Judge whose answers come from callbacks; unset callbacks throw.
class ScriptedJudge final : public Judge {
 public:
  explicit ScriptedJudge(std::string id) : id_(std::move(id)) {}

  std::function<RankingObservation(const WindowPrompt&, std::size_t)> on_rank;
  std::function<int(const FlagPrompt&)> on_flag;
  std::function<std::string(const CategoryPrompt&)> on_category;
  std::function<int(const DirectionPrompt&)> on_direction;
  std::function<double(const RatingPrompt&)> on_rate;
  std::atomic<int> calls{0};

  std::string id() const override { return id_; }
  std::size_t max_in_flight() const override { return 1; }

  RankingObservation rank(const WindowPrompt& w, std::size_t i) override {
    ++calls;
    return need(on_rank)(w, i);
  }
  int plausibility(const FlagPrompt& p) override {
    ++calls;
    return need(on_flag)(p);
  }
  std::string categorize(const CategoryPrompt& p) override {
    ++calls;
    return need(on_category)(p);
  }
  int direction(const DirectionPrompt& p) override {
    ++calls;
    return need(on_direction)(p);
  }
  double rate(const RatingPrompt& p) override {
    ++calls;
    return need(on_rate)(p);
  }

 private:
  template <class F>
  static const F& need(const F& f) {
    if (!f) throw JudgeUnavailable("no script for this call");
    return f;
  }
  std::string id_;
};

}  // namespace valuerank::testing
