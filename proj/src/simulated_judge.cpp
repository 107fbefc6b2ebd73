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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "valuerank/errors.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {

namespace {

std::uint64_t window_seed(std::uint64_t base, const std::string& judge, std::size_t window_index,
                          const WindowPrompt& window) {
  std::uint64_t seed = derive_seed(base, judge);
  seed = derive_seed(seed, static_cast<std::uint64_t>(window_index));
  for (const auto& slot : window.texts) seed = derive_seed(seed, slot.item);
  return seed;
}

}  // namespace

SimulatedJudge::SimulatedJudge(JudgeSpec spec, std::shared_ptr<const SimulatedTruth> truth)
    : spec_(std::move(spec)), truth_(std::move(truth)) {
  spec_.validate();
  if (!truth_) throw InvalidArgument("simulated judge requires ground truth");
}

std::size_t SimulatedJudge::max_in_flight() const {
  return static_cast<std::size_t>(spec_.max_in_flight);
}

double SimulatedJudge::truth_of(const ItemId& id) const {
  auto it = truth_->utilities.find(id);
  if (it == truth_->utilities.end()) throw MissingItem(id);
  return it->second;
}

RankingObservation SimulatedJudge::rank(const WindowPrompt& window, std::size_t window_index) {
  window.validate();
  const std::size_t k = window.texts.size();
  std::vector<double> perturbed(k);
  Rng rng(window_seed(spec_.rng_seed, id(), window_index, window));
  for (std::size_t i = 0; i < k; ++i) {
    perturbed[i] = truth_of(window.texts[i].item) + spec_.bias;
    if (spec_.noise_scale > 0.0) perturbed[i] += rng.gumbel(spec_.noise_scale);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (perturbed[a] != perturbed[b]) return perturbed[a] > perturbed[b];
    return window.texts[a].item < window.texts[b].item;
  });
  RankingObservation obs;
  obs.judge_id = id();
  obs.window_index = window_index;
  for (std::size_t i : order) obs.items.push_back(window.texts[i].item);
  return obs;
}

int SimulatedJudge::plausibility(const FlagPrompt& prompt) {
  Rng rng(derive_seed(derive_seed(spec_.rng_seed, id()), "flag:" + prompt.item));
  return rng.uniform01() < spec_.error_rate ? 0 : 1;
}

std::string SimulatedJudge::categorize(const CategoryPrompt& prompt) {
  Rng rng(derive_seed(derive_seed(spec_.rng_seed, id()),
                      "category:" + prompt.parent + "\n" + prompt.text +
                          (prompt.offer_neutral ? "\n1" : "\n0")));
  std::optional<std::string> truth;
  if (auto it = truth_->label_paths.find(prompt.text); it != truth_->label_paths.end()) {
    for (const auto& label : it->second) {
      if (std::find(prompt.children.begin(), prompt.children.end(), label) !=
          prompt.children.end()) {
        truth = label;
      }
    }
  }
  std::vector<std::string> options = prompt.children;
  if (prompt.offer_neutral) options.emplace_back(kNeutralCategory);
  std::string intended = truth ? *truth
                               : (prompt.offer_neutral ? std::string(kNeutralCategory)
                                                       : options[rng.uniform_index(options.size())]);
  if (options.size() > 1 && rng.uniform01() < spec_.error_rate) {
    std::vector<std::string> others;
    for (const auto& o : options) {
      if (o != intended) others.push_back(o);
    }
    return others[rng.uniform_index(others.size())];
  }
  return intended;
}

int SimulatedJudge::direction(const DirectionPrompt& prompt) {
  Rng rng(derive_seed(derive_seed(spec_.rng_seed, id()), "direction:" + prompt.value + "\n" + prompt.text));
  int intended = 0;
  if (auto it = truth_->directions.find(prompt.text); it != truth_->directions.end()) {
    intended = it->second;
  }
  if (rng.uniform01() < spec_.error_rate) {
    const int others[2] = {intended == -1 ? 0 : -1, intended == 1 ? 0 : 1};
    return others[rng.uniform_index(2)];
  }
  return intended;
}

double SimulatedJudge::rate(const RatingPrompt& prompt) {
  Rng rng(derive_seed(derive_seed(spec_.rng_seed, id()), "rate:" + prompt.item));
  double value = truth_of(prompt.item) + spec_.bias;
  if (spec_.noise_scale > 0.0) value += spec_.noise_scale * rng.normal();
  return std::clamp(value, -10.0, 10.0);
}

}  // namespace valuerank
