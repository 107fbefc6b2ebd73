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

#include "valuerank/vidb.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "valuerank/calibration.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kBlendTolerance = 1e-9;
constexpr int kMaxFlagVotes = 7;

bool in_score_range(double x) { return std::isfinite(x) && x >= kScoreMin && x <= kScoreMax; }

const json& field(const json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(line, name, "missing");
  return *it;
}

std::string string_field(const json& j, const char* name, std::size_t line) {
  const json& v = field(j, name, line);
  if (!v.is_string()) throw SchemaError(line, name, "expected a string");
  return v.get<std::string>();
}

double number_field(const json& j, const char* name, std::size_t line) {
  const json& v = field(j, name, line);
  if (!v.is_number()) throw SchemaError(line, name, "expected a number");
  return v.get<double>();
}

int integer_field(const json& j, const char* name, std::size_t line) {
  const json& v = field(j, name, line);
  if (!v.is_number_integer()) throw SchemaError(line, name, "expected an integer");
  return v.get<int>();
}

}  // namespace

ItemId make_item_id(std::string_view text, std::string_view value) {
  std::string key(value);
  key.push_back('\x1f');
  key.append(text);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(key));
  return buf;
}

double blended_score(double calibrated, double human_rating) {
  return clip_score((1.0 - kHumanBlendWeight) * calibrated + kHumanBlendWeight * human_rating);
}

VidbEntry blend_human(VidbEntry entry, double human_rating) {
  if (!entry.flagged) throw ProtocolViolation("cannot blend an unflagged entry: " + entry.item_id);
  if (!in_score_range(human_rating)) throw InvalidArgument("human rating outside [-10, 10]");
  entry.human_rating = human_rating;
  entry.final_score = blended_score(entry.calibrated_score, human_rating);
  return entry;
}

void validate_entry(const VidbEntry& e, std::size_t line) {
  if (e.item_id.empty()) throw SchemaError(line, "item_id", "empty");
  if (!std::isfinite(e.raw_utility)) throw SchemaError(line, "raw_utility", "not finite");
  if (!in_score_range(e.calibrated_score)) {
    throw SchemaError(line, "calibrated_score", "outside [-10, 10]");
  }
  if (!in_score_range(e.final_score)) throw SchemaError(line, "final_score", "outside [-10, 10]");
  if (e.flag_votes < 0 || e.flag_votes > kMaxFlagVotes) {
    throw SchemaError(line, "flag_votes", "outside 0..7");
  }
  if (e.n_windows < 1) throw SchemaError(line, "n_windows", "must be >= 1");
  if (e.human_rating) {
    if (!in_score_range(*e.human_rating)) throw SchemaError(line, "human_rating", "outside [-10, 10]");
    if (!e.flagged) throw SchemaError(line, "human_rating", "present on an unflagged entry");
    const double expected = blended_score(e.calibrated_score, *e.human_rating);
    if (std::abs(e.final_score - expected) > kBlendTolerance) {
      throw SchemaError(line, "final_score", "does not equal the calibrated/human blend");
    }
  } else if (std::abs(e.final_score - e.calibrated_score) > kBlendTolerance) {
    throw SchemaError(line, "final_score", "differs from calibrated_score without a human rating");
  }
}

ordered_json entry_to_json(const VidbEntry& e) {
  ordered_json j;
  j["item_id"] = e.item_id;
  j["value"] = e.value;
  j["theory"] = e.theory;
  j["text"] = e.text;
  j["raw_utility"] = e.raw_utility;
  j["calibrated_score"] = e.calibrated_score;
  j["flagged"] = e.flagged;
  j["flag_votes"] = e.flag_votes;
  j["human_rating"] = e.human_rating ? ordered_json(*e.human_rating) : ordered_json(nullptr);
  j["final_score"] = e.final_score;
  j["n_windows"] = e.n_windows;
  return j;
}

VidbEntry entry_from_json(const json& j, std::size_t line) {
  static constexpr const char* kFields[] = {
      "item_id",  "value",      "theory",       "text",        "raw_utility", "calibrated_score",
      "flagged",  "flag_votes", "human_rating", "final_score", "n_windows"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : kFields) known = known || it.key() == f;
    if (!known) throw SchemaError(line, it.key(), "unknown field");
  }
  VidbEntry e;
  e.item_id = string_field(j, "item_id", line);
  e.value = string_field(j, "value", line);
  e.theory = string_field(j, "theory", line);
  e.text = string_field(j, "text", line);
  e.raw_utility = number_field(j, "raw_utility", line);
  e.calibrated_score = number_field(j, "calibrated_score", line);
  const json& flagged = field(j, "flagged", line);
  if (!flagged.is_boolean()) throw SchemaError(line, "flagged", "expected a boolean");
  e.flagged = flagged.get<bool>();
  e.flag_votes = integer_field(j, "flag_votes", line);
  const json& human = field(j, "human_rating", line);
  if (!human.is_null()) {
    if (!human.is_number()) throw SchemaError(line, "human_rating", "expected a number or null");
    e.human_rating = human.get<double>();
  }
  e.final_score = number_field(j, "final_score", line);
  e.n_windows = integer_field(j, "n_windows", line);
  validate_entry(e, line);
  return e;
}

std::string serialize_db(std::span<const VidbEntry> entries) {
  std::string out;
  std::size_t line = 0;
  for (const auto& e : entries) {
    validate_entry(e, ++line);
    out += entry_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<VidbEntry> parse_db(const std::string& text) {
  std::vector<VidbEntry> out;
  for (const auto& record : io::parse_jsonl(text)) {
    out.push_back(entry_from_json(record.value, record.line));
  }
  return out;
}

void write_db(const std::filesystem::path& path, std::span<const VidbEntry> entries,
              const io::BeforeRename& before_rename) {
  io::write_text_atomic(path, serialize_db(entries), before_rename);
}

std::vector<VidbEntry> read_db(const std::filesystem::path& path) {
  return parse_db(io::read_text(path));
}

}  // namespace valuerank
