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

#include <string>
#include <string_view>
#include <vector>

#include "valuerank/ranking.hpp"

namespace valuerank {

enum class PromptFormat { Binary, Default, OneShot };

std::string_view to_string(PromptFormat format);
PromptFormat parse_prompt_format(std::string_view name);

/// One text in a ranking window. Its slot number is its 1-based position.
struct WindowSlot {
  ItemId item;
  std::string text;
};

/// A k-text ranking task for one value.
struct WindowPrompt {
  std::string value_name;
  std::string value_definition;
  std::string theory_name = "a value theory";
  std::string label_name = "Value";
  std::vector<WindowSlot> texts;
  PromptFormat format = PromptFormat::Binary;

  /// Binary needs exactly two texts, the other formats at least two.
  void validate() const;
};

/// Plausibility check of a calibrated score.
struct FlagPrompt {
  ItemId item;
  std::string value_definition;
  std::string text;
  double rating = 0.0;
};

/// One level of hierarchy categorization.
struct CategoryPrompt {
  std::string parent;
  std::string parent_definition;
  std::vector<std::string> children;
  std::string text;
  bool offer_neutral = false;
};

struct DirectionPrompt {
  std::string theory_description;
  std::string value;
  std::string definition;
  std::string text;
};

/// Direct scalar rating, used only by the rating-vs-ranking comparison.
struct RatingPrompt {
  ItemId item;
  std::string value_name;
  std::string value_definition;
  std::string text;
};

/// Reply token meaning "no further category" in a categorization round.
inline constexpr std::string_view kNeutralCategory = "Neutral";

std::string render_prompt(const WindowPrompt& window);
std::string render_flag_prompt(const FlagPrompt& prompt);
std::string render_category_prompt(const CategoryPrompt& prompt);
std::string render_direction_prompt(const DirectionPrompt& prompt);
std::string render_rating_prompt(const RatingPrompt& prompt);

/// Leading standalone 1 or 2. Throws MalformedVerdict otherwise.
int parse_binary_verdict(std::string_view raw_reply);

/// A permutation of 1..k, best first. Throws MalformedVerdict otherwise.
std::vector<int> parse_order_verdict(std::string_view raw_reply, std::size_t k);

/// 1 (plausible) or 0 (problematic).
int parse_flag_verdict(std::string_view raw_reply);

/// One of `children` (case-insensitive match, canonical spelling returned), or
/// kNeutralCategory when `offer_neutral` and the judge answered None/Neutral.
std::string parse_category_verdict(std::string_view raw_reply,
                                   const std::vector<std::string>& children, bool offer_neutral);

/// supports -> +1, not related -> 0, opposes -> -1.
int parse_direction_verdict(std::string_view raw_reply);

/// A number in [-10, 10].
double parse_rating_verdict(std::string_view raw_reply);

std::string_view trim(std::string_view s);

}  // namespace valuerank
