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

#include "synthetic.hpp"

#include <cmath>
#include <limits>

#include "valuerank/calibration.hpp"
#include "valuerank/evaluator.hpp"
#include "valuerank/rng.hpp"

namespace valuerank::testing {

SyntheticSuite make_synthetic_suite(std::size_t n_anchors, std::size_t n_responses,
                                    std::uint64_t seed) {
  SyntheticSuite s;
  s.truth = std::make_shared<SimulatedTruth>();
  Rng rng(derive_seed(seed, "suite"));
  UtilityVector theta;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n_anchors; ++i) {
    texts.push_back("anchor text " + std::to_string(i));
    theta[make_item_id(texts.back(), s.value)] = rng.normal();
  }
  const CalibratedScores scores = calibrate(theta);
  for (const auto& text : texts) {
    VidbEntry e;
    e.item_id = make_item_id(text, s.value);
    e.value = s.value;
    e.theory = "svt";
    e.text = text;
    e.raw_utility = theta.at(e.item_id);
    e.calibrated_score = scores.at(e.item_id);
    e.final_score = e.calibrated_score;
    e.n_windows = 30;
    s.truth->utilities[e.item_id] = e.final_score;
    s.anchors.push_back(e);
  }
  for (std::size_t i = 0; i < n_responses; ++i) {
    s.responses.push_back("response text " + std::to_string(i));
    s.planted.push_back(-9.0 + 18.0 * rng.uniform01());
    s.truth->utilities[response_item_id(s.responses.back())] = s.planted.back();
  }
  return s;
}

std::vector<ItemId> nearest_panel(const std::vector<VidbEntry>& anchors,
                                  const std::vector<double>& targets) {
  std::vector<ItemId> out;
  std::vector<bool> used(anchors.size(), false);
  for (double t : targets) {
    std::size_t best = anchors.size();
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const double d = std::abs(anchors[i].final_score - t);
      if (!used[i] && d < gap) {
        gap = d;
        best = i;
      }
    }
    used[best] = true;
    out.push_back(anchors[best].item_id);
  }
  return out;
}

JudgeSpec simulated_spec(double noise_scale, std::uint64_t seed, int max_in_flight) {
  JudgeSpec spec;
  spec.noise_scale = noise_scale;
  spec.rng_seed = seed;
  spec.max_in_flight = max_in_flight;
  return spec;
}

}  // namespace valuerank::testing
