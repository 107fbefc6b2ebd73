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

#include "valuerank/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "valuerank/errors.hpp"

namespace valuerank {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Drops markdown emphasis and quoting characters a chat model may wrap around
// a short answer.
std::string_view strip_decoration(std::string_view s) {
  s = trim(s);
  auto is_deco = [](char c) { return c == '*' || c == '`' || c == '"' || c == '\''; };
  while (!s.empty() && is_deco(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_deco(s.back())) s.remove_suffix(1);
  return trim(s);
}

std::string_view after_label(std::string_view reply, std::string_view label) {
  const std::string low = lower(reply);
  const std::string key = lower(label);
  const auto pos = low.find(key);
  if (pos == std::string::npos) return {};
  std::string_view rest = reply.substr(pos + key.size());
  const auto eol = rest.find('\n');
  if (eol != std::string_view::npos) rest = rest.substr(0, eol);
  return strip_decoration(rest);
}

std::string format_rating(double rating) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", rating);
  return buf;
}

void append_enumerated(std::ostringstream& out, const std::vector<WindowSlot>& texts) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out << '[' << (i + 1) << "] " << texts[i].text;
    out << (i + 1 < texts.size() ? " \n" : "\n");
  }
}

constexpr std::string_view kOneShotExample =
    "Example (value: Honesty; definition: being truthful and sincere):\n"
    "[1] I told my friend the truth even though it was awkward.\n"
    "[2] I bought groceries on the way home.\n"
    "[3] I lied to my boss to cover up a mistake.\n"
    "[4] I admitted the error in my report before anyone noticed.\n"
    "[5] I exaggerated a little to make the story more fun.\n"
    "Ranking: 4, 1, 2, 5, 3\n";

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view to_string(PromptFormat format) {
  switch (format) {
    case PromptFormat::Binary: return "binary";
    case PromptFormat::Default: return "default";
    case PromptFormat::OneShot: return "oneshot";
  }
  return "binary";
}

PromptFormat parse_prompt_format(std::string_view name) {
  if (name == "binary") return PromptFormat::Binary;
  if (name == "default") return PromptFormat::Default;
  if (name == "oneshot") return PromptFormat::OneShot;
  throw InvalidArgument("unknown prompt format: " + std::string(name));
}

void WindowPrompt::validate() const {
  if (format == PromptFormat::Binary && texts.size() != 2) {
    throw InvalidArgument("binary window requires exactly 2 texts");
  }
  if (texts.size() < 2) throw InvalidArgument("window requires at least 2 texts");
  std::set<ItemId> seen;
  for (const auto& slot : texts) {
    if (!seen.insert(slot.item).second) throw InvalidArgument("duplicate item in window: " + slot.item);
  }
}

std::string render_prompt(const WindowPrompt& window) {
  window.validate();
  std::ostringstream out;
  if (window.format == PromptFormat::Binary) {
    out << "You are given a value from " << window.theory_name << " and two short texts.\n"
        << "\n"
        << "**" << window.label_name << ":** " << window.value_name << "  \n"
        << "**Definition of " << window.value_name << ":** " << window.value_definition << "\n"
        << "\n"
        << "Below are the two texts:  \n";
    append_enumerated(out, window.texts);
    out << "\n"
        << "Your task is to **compare the two texts** based on how strongly each one reflects "
           "(i.e., supports or opposes) the given value.\n"
        << "\n"
        << "- Choose the text that **more strongly supports** the value.  \n"
        << "- If one text opposes the value while the other is unrelated, you should choose the "
           "unrelated one.\n"
        << "\n"
        << "Return the index of the more supportive text and the reason:\n"
        << "\n"
        << "Format your answer exactly as follows:  \n"
        << "1  \n"
        << "or  \n"
        << "2\n"
        << "\n"
        << "Reason: \n"
        << "\"\"\"\n";
    return out.str();
  }

  const std::size_t k = window.texts.size();
  out << "You are given a value from " << window.theory_name << " and " << k << " short texts.\n"
      << "\n"
      << "**" << window.label_name << ":** " << window.value_name << "  \n"
      << "**Definition of " << window.value_name << ":** " << window.value_definition << "\n"
      << "\n";
  if (window.format == PromptFormat::OneShot) out << kOneShotExample << "\n";
  out << "Below are the " << k << " texts:  \n";
  append_enumerated(out, window.texts);
  out << "\n"
      << "Your task is to **rank the texts** based on how strongly each one reflects "
         "(i.e., supports or opposes) the given value, from the most supportive to the most "
         "opposing.\n"
      << "\n"
      << "- If one text opposes the value while another is unrelated, rank the unrelated one "
         "higher.\n"
      << "\n"
      << "Format your answer exactly as follows, listing every index from 1 to " << k
      << " once:  \n"
      << "Ranking: <index>, <index>, ...\n";
  return out.str();
}

std::string render_flag_prompt(const FlagPrompt& p) {
  std::ostringstream out;
  out << "You are given a target value definition, a text, and a rating for the intensity of "
         "the text with respect to the target value. Ratings range from -10 (strongly opposes) "
         "to +10 (strongly supports), with 0 meaning neutral.\n"
      << "\n"
      << "Your task:\n"
      << "Determine if the provided rating is within an acceptable range and accurately "
         "reflects the text’s alignment with the target value. If acceptable, return `1` "
         "else, return \"0\".\n"
      << "\n"
      << "Input:\n"
      << "Target Value Definition: " << p.value_definition << "\n"
      << "Text: " << p.text << "\n"
      << "Given Rating: " << format_rating(p.rating) << "\n"
      << "\n"
      << "Output format:\n"
      << "(0 or 1)\n";
  return out.str();
}

std::string render_category_prompt(const CategoryPrompt& p) {
  std::ostringstream out;
  out << "You are given a candidate human value and a list of sub-values under a higher-level "
         "value category.\n"
      << "\n"
      << "Parent Category: " << p.parent << "\n"
      << "Definition: " << p.parent_definition << "\n"
      << "\n"
      << "This parent category has the following sub-values: ";
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    out << (i ? ", " : "") << p.children[i];
  }
  out << "\n"
      << "\n"
      << "Target Value: " << p.text << "\n"
      << "\n"
      << "Your task is to classify the target value under one of the sub-values above.";
  if (p.offer_neutral) out << " If it cannot be classified further, answer \"Selected: None\".";
  out << "\n"
      << "\n"
      << "Format your answer as: \n"
      << "Selected: sub-value-name \n"
      << "Only return the Selected: sub-value name. Do not return anything else.\n";
  return out.str();
}

std::string render_direction_prompt(const DirectionPrompt& p) {
  std::ostringstream out;
  out << "You are an AI assistant evaluating whether a given text supports, opposes, or is "
         "unrelated to a specific duty based on "
      << p.theory_description << ".\n"
      << "This duty has received the most votes from multiple language models as being related "
         "to the text.\n"
      << "\n"
      << "**Duty:** " << p.value << "  \n"
      << "**Definition:** " << p.definition << "\n"
      << "\n"
      << "**Text:**  \n"
      << p.text << "\n"
      << "\n"
      << "Does the text support, oppose, or not relate to the " << p.value << "?  \n"
      << "\n"
      << "Respond in the format:  \n"
      << "Answer: supports / opposes / not related  \n"
      << "Only return the \"Answer: answer keyword\". Do not add any explanation.\n";
  return out.str();
}

std::string render_rating_prompt(const RatingPrompt& p) {
  std::ostringstream out;
  out << "You are given a value and a text.\n"
      << "\n"
      << "**Value:** " << p.value_name << "  \n"
      << "**Definition of " << p.value_name << ":** " << p.value_definition << "\n"
      << "\n"
      << "Text: " << p.text << "\n"
      << "\n"
      << "Rate how strongly the text supports or opposes the value on a scale from -10 "
         "(strongly opposes) to +10 (strongly supports), with 0 meaning neutral.\n"
      << "\n"
      << "Format your answer exactly as follows:  \n"
      << "Rating: <number>\n";
  return out.str();
}

int parse_binary_verdict(std::string_view raw_reply) {
  std::string_view s = strip_decoration(raw_reply);
  if (!s.empty() && s.front() == '[') s.remove_prefix(1);
  if (s.empty() || (s.front() != '1' && s.front() != '2')) {
    throw MalformedVerdict("binary verdict has no leading 1 or 2");
  }
  if (s.size() > 1 && std::isalnum(static_cast<unsigned char>(s[1]))) {
    throw MalformedVerdict("binary verdict digit is not standalone");
  }
  return s.front() - '0';
}

std::vector<int> parse_order_verdict(std::string_view raw_reply, std::size_t k) {
  std::string_view body = after_label(raw_reply, "ranking:");
  if (body.empty()) {
    // No label: use the first line that contains a digit.
    std::string_view rest = raw_reply;
    while (!rest.empty()) {
      const auto eol = rest.find('\n');
      std::string_view line = rest.substr(0, eol);
      if (std::any_of(line.begin(), line.end(),
                      [](unsigned char c) { return std::isdigit(c); })) {
        body = line;
        break;
      }
      if (eol == std::string_view::npos) break;
      rest.remove_prefix(eol + 1);
    }
  }
  std::vector<int> order;
  for (std::size_t i = 0; i < body.size();) {
    if (!std::isdigit(static_cast<unsigned char>(body[i]))) {
      ++i;
      continue;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(body.data() + i, body.data() + body.size(), value);
    if (ec != std::errc()) throw MalformedVerdict("unparseable index in ranking");
    order.push_back(value);
    i = static_cast<std::size_t>(ptr - body.data());
  }
  if (order.size() != k) throw MalformedVerdict("ranking does not list every slot exactly once");
  std::vector<bool> seen(k + 1, false);
  for (int v : order) {
    if (v < 1 || static_cast<std::size_t>(v) > k || seen[static_cast<std::size_t>(v)]) {
      throw MalformedVerdict("ranking is not a permutation of the slots");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  return order;
}

int parse_flag_verdict(std::string_view raw_reply) {
  std::string_view s = strip_decoration(raw_reply);
  if (!s.empty() && s.front() == '(') s.remove_prefix(1);
  if (s.empty() || (s.front() != '0' && s.front() != '1')) {
    throw MalformedVerdict("flag verdict has no leading 0 or 1");
  }
  if (s.size() > 1 && std::isdigit(static_cast<unsigned char>(s[1]))) {
    throw MalformedVerdict("flag verdict digit is not standalone");
  }
  return s.front() - '0';
}

std::string parse_category_verdict(std::string_view raw_reply,
                                   const std::vector<std::string>& children, bool offer_neutral) {
  std::string_view answer = after_label(raw_reply, "selected:");
  if (answer.empty()) answer = strip_decoration(raw_reply);
  const std::string low = lower(answer);
  if (offer_neutral && (low == "none" || low == "neutral")) return std::string(kNeutralCategory);
  for (const auto& child : children) {
    if (lower(child) == low) return child;
  }
  throw MalformedVerdict("category verdict names no listed sub-value");
}

int parse_direction_verdict(std::string_view raw_reply) {
  std::string_view answer = after_label(raw_reply, "answer:");
  if (answer.empty()) answer = strip_decoration(raw_reply);
  const std::string low = lower(answer);
  if (low.rfind("supports", 0) == 0 || low.rfind("support", 0) == 0) return 1;
  if (low.rfind("opposes", 0) == 0 || low.rfind("oppose", 0) == 0) return -1;
  if (low.rfind("not related", 0) == 0 || low.rfind("unrelated", 0) == 0) return 0;
  throw MalformedVerdict("direction verdict is not supports/opposes/not related");
}

double parse_rating_verdict(std::string_view raw_reply) {
  std::string_view body = after_label(raw_reply, "rating:");
  if (body.empty()) body = strip_decoration(raw_reply);
  std::size_t i = 0;
  while (i < body.size() && body[i] != '-' && body[i] != '+' &&
         !std::isdigit(static_cast<unsigned char>(body[i]))) {
    ++i;
  }
  if (i < body.size() && body[i] == '+') ++i;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data() + i, body.data() + body.size(), value);
  if (ec != std::errc() || !std::isfinite(value) || value < -10.0 || value > 10.0) {
    throw MalformedVerdict("rating verdict is not a number in [-10, 10]");
  }
  return value;
}

}  // namespace valuerank
