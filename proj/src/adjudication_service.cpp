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

#include "valuerank/adjudication_service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include "httplib.h"
#include "valuerank/calibration.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPairQueueSeed = 0x5eed;

ApiResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

void append_line(const std::filesystem::path& path, const json& record) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw InvalidArgument("cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw InvalidArgument("short write to " + path.string());
}

std::vector<io::JsonLine> read_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return io::read_jsonl(path);
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::map<std::string, std::string> read_definitions(const std::filesystem::path& path) {
  try {
    return json::parse(io::read_text(path)).get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw InvalidArgument("invalid definitions file: " + std::string(e.what()));
  }
}

AdjudicationStore::AdjudicationStore(std::filesystem::path db_path,
                                     std::map<std::string, std::string> definitions,
                                     io::BeforeRename before_rename)
    : db_path_(std::move(db_path)),
      definitions_(std::move(definitions)),
      before_rename_(std::move(before_rename)) {
  entries_ = read_db(db_path_);
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].item_id, i);
  replay_logs();
}

std::filesystem::path AdjudicationStore::ratings_log_path() const {
  auto p = db_path_;
  p += ".ratings.jsonl";
  return p;
}

std::filesystem::path AdjudicationStore::pairs_log_path() const {
  auto p = db_path_;
  p += ".pairs.jsonl";
  return p;
}

void AdjudicationStore::replay_logs() {
  bool changed = false;
  for (const auto& [line, record] : read_log(ratings_log_path())) {
    const std::string id = record.at("item_id").get<std::string>();
    auto it = index_.find(id);
    if (it == index_.end()) throw SchemaError(line, "item_id", "unknown item " + id);
    ratings_[id].push_back(record.at("rating").get<double>());
    if (auto s = record.find("submission_id"); s != record.end() && s->is_string()) {
      rating_submissions_[s->get<std::string>()] = record;
    }
  }
  // The log is authoritative: it may hold ratings a crash kept out of the DB.
  for (const auto& [id, values] : ratings_) {
    VidbEntry& e = entries_[index_.at(id)];
    VidbEntry blended = blend_human(e, mean_of(values));
    if (!(blended == e)) {
      e = blended;
      changed = true;
    }
  }
  if (changed) write_db(db_path_, entries_, before_rename_);
  for (const auto& [line, record] : read_log(pairs_log_path())) {
    PairJudgment p{record.at("left_id").get<std::string>(), record.at("right_id").get<std::string>(),
                   record.at("winner").get<std::string>() == "left"};
    pairs_.push_back(p);
    if (auto s = record.find("submission_id"); s != record.end() && s->is_string()) {
      pair_submissions_[s->get<std::string>()] = record;
    }
  }
}

json AdjudicationStore::entry_json(const VidbEntry& e) const {
  json j = entry_to_json(e);
  auto d = definitions_.find(e.value);
  j["definition"] = d == definitions_.end() ? "" : d->second;
  auto r = ratings_.find(e.item_id);
  j["ratings_count"] = r == ratings_.end() ? 0 : r->second.size();
  j["resolved"] = e.human_rating.has_value();
  return j;
}

const VidbEntry* AdjudicationStore::find_locked(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<VidbEntry> AdjudicationStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

ApiResponse AdjudicationStore::flags() const {
  std::shared_lock lock(mutex_);
  std::vector<const VidbEntry*> flagged;
  for (const auto& e : entries_) {
    if (e.flagged) flagged.push_back(&e);
  }
  std::stable_sort(flagged.begin(), flagged.end(), [](const auto* a, const auto* b) {
    return a->flag_votes != b->flag_votes ? a->flag_votes > b->flag_votes
                                          : a->item_id < b->item_id;
  });
  json list = json::array();
  for (const auto* e : flagged) list.push_back(entry_json(*e));
  return {200, json{{"flags", list}}};
}

ApiResponse AdjudicationStore::entry(const std::string& item_id) const {
  std::shared_lock lock(mutex_);
  const VidbEntry* e = find_locked(item_id);
  if (!e) return error_response(404, "unknown item_id: " + item_id);
  return {200, entry_json(*e)};
}

ApiResponse AdjudicationStore::summary() const {
  std::shared_lock lock(mutex_);
  std::size_t flagged = 0;
  std::size_t resolved = 0;
  for (const auto& e : entries_) {
    if (!e.flagged) continue;
    ++flagged;
    if (e.human_rating) ++resolved;
  }
  return {200, json{{"entries", entries_.size()},
                    {"flagged", flagged},
                    {"resolved", resolved},
                    {"pending", flagged - resolved},
                    {"pair_judgments", pairs_.size()}}};
}

ApiResponse AdjudicationStore::submit_rating(const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error&) {
    return error_response(400, "request body is not JSON");
  }
  if (!request.is_object() || !request.contains("item_id") || !request["item_id"].is_string()) {
    return error_response(422, "item_id is required");
  }
  const std::string id = request["item_id"].get<std::string>();
  const bool accept = request.value("accept", false) == true;
  std::optional<std::string> submission;
  if (auto s = request.find("submission_id"); s != request.end() && s->is_string()) {
    submission = s->get<std::string>();
  }

  std::unique_lock lock(mutex_);
  if (submission) {
    auto seen = rating_submissions_.find(*submission);
    if (seen != rating_submissions_.end()) {
      const VidbEntry* e = find_locked(seen->second.at("item_id").get<std::string>());
      json out = entry_json(*e);
      out["duplicate"] = true;
      return {200, out};
    }
  }
  const VidbEntry* current = find_locked(id);
  if (!current) return error_response(404, "unknown item_id: " + id);

  double rating;
  if (accept) {
    rating = current->calibrated_score;
  } else {
    auto r = request.find("rating");
    if (r == request.end() || !r->is_number()) {
      return error_response(422, "rating must be a number, or accept must be true");
    }
    rating = r->get<double>();
    if (!std::isfinite(rating) || rating < kScoreMin || rating > kScoreMax) {
      return error_response(422, "rating outside [-10, 10]");
    }
  }
  if (!current->flagged) return error_response(409, "item is not flagged: " + id);

  std::vector<double> values = ratings_[id];
  values.push_back(rating);
  std::vector<VidbEntry> next = entries_;
  VidbEntry& target = next[index_.at(id)];
  target = blend_human(target, mean_of(values));

  json record{{"item_id", id}, {"rating", rating}, {"accept", accept}};
  if (submission) record["submission_id"] = *submission;
  try {
    append_line(ratings_log_path(), record);
  } catch (const std::exception& e) {
    return error_response(500, std::string("could not record the rating: ") + e.what());
  }
  // From here the rating is durable: a failed DB rewrite is repaired from the
  // log on the next start.
  ratings_[id] = std::move(values);
  if (submission) rating_submissions_[*submission] = record;
  entries_ = std::move(next);
  try {
    write_db(db_path_, entries_, before_rename_);
  } catch (const std::exception& e) {
    return error_response(500, std::string("rating logged but the DB was not rewritten: ") +
                                   e.what());
  }
  return {200, entry_json(entries_[index_.at(id)])};
}

std::optional<std::pair<std::size_t, std::size_t>> AdjudicationStore::pair_at(
    std::size_t position, const std::optional<std::string>& value) const {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!value || entries_[i].value == *value) groups[entries_[i].value].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> usable;
  for (const auto& [v, members] : groups) {
    if (members.size() >= 2) usable.push_back(&members);
  }
  if (usable.empty()) return std::nullopt;
  Rng rng(derive_seed(kPairQueueSeed, static_cast<std::uint64_t>(position)));
  const auto& members = *usable[rng.uniform_index(usable.size())];
  const auto picks = rng.sample_without_replacement(members.size(), 2);
  return std::make_pair(members[picks[0]], members[picks[1]]);
}

ApiResponse AdjudicationStore::next_pair(const std::optional<std::string>& value) const {
  std::shared_lock lock(mutex_);
  const std::size_t position = pairs_.size();
  const auto pair = pair_at(position, value);
  if (!pair) return error_response(404, "no value has two entries");
  const auto side = [&](std::size_t i) {
    return json{{"item_id", entries_[i].item_id}, {"text", entries_[i].text}};
  };
  const auto& left = entries_[pair->first];
  auto d = definitions_.find(left.value);
  return {200, json{{"position", position},
                    {"value", left.value},
                    {"definition", d == definitions_.end() ? "" : d->second},
                    {"left", side(pair->first)},
                    {"right", side(pair->second)}}};
}

ApiResponse AdjudicationStore::submit_pair(const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error&) {
    return error_response(400, "request body is not JSON");
  }
  if (!request.is_object()) return error_response(422, "expected an object");
  const auto text_field = [&](const char* name) -> std::optional<std::string> {
    auto it = request.find(name);
    if (it == request.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
  };
  const auto left = text_field("left_id");
  const auto right = text_field("right_id");
  const auto winner = text_field("winner");
  if (!left || !right || !winner || (*winner != "left" && *winner != "right")) {
    return error_response(422, "left_id, right_id and winner (left|right) are required");
  }
  if (*left == *right) return error_response(422, "a pair needs two distinct items");
  const auto submission = text_field("submission_id");

  std::unique_lock lock(mutex_);
  if (submission && pair_submissions_.contains(*submission)) {
    return {200, json{{"recorded", false}, {"duplicate", true}, {"position", pairs_.size()}}};
  }
  const VidbEntry* l = find_locked(*left);
  const VidbEntry* r = find_locked(*right);
  if (!l || !r) return error_response(404, "unknown item id");
  if (l->value != r->value) return error_response(422, "pair spans two values");

  json record{{"left_id", *left}, {"right_id", *right}, {"winner", *winner}};
  if (submission) record["submission_id"] = *submission;
  try {
    append_line(pairs_log_path(), record);
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
  pairs_.push_back({*left, *right, *winner == "left"});
  if (submission) pair_submissions_[*submission] = record;
  return {200, json{{"recorded", true}, {"position", pairs_.size()}}};
}

ApiResponse AdjudicationStore::pair_audit() const {
  std::shared_lock lock(mutex_);
  std::size_t comparable = 0;
  std::size_t agree = 0;
  std::size_t ties = 0;
  for (const auto& p : pairs_) {
    const VidbEntry* l = find_locked(p.left);
    const VidbEntry* r = find_locked(p.right);
    if (!l || !r) continue;
    // Equal scores (e.g. identical texts) accept either choice.
    if (l->final_score == r->final_score) {
      ++ties;
      continue;
    }
    ++comparable;
    if ((l->final_score > r->final_score) == p.left_wins) ++agree;
  }
  json out{{"judgments", pairs_.size()}, {"comparable", comparable}, {"agreements", agree},
           {"ties", ties}};
  out["accuracy"] = comparable ? json(static_cast<double>(agree) / comparable) : json(nullptr);
  return {200, out};
}

struct AdjudicationServer::Impl {
  std::shared_ptr<AdjudicationStore> store;
  httplib::Server server;
};

AdjudicationServer::AdjudicationServer(std::shared_ptr<AdjudicationStore> store,
                                       std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->store = std::move(store);
  auto& srv = impl_->server;
  auto* st = impl_->store.get();
  const auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  srv.Get("/api/flags", [=](const httplib::Request&, httplib::Response& res) {
    reply(res, st->flags());
  });
  srv.Get("/api/summary", [=](const httplib::Request&, httplib::Response& res) {
    reply(res, st->summary());
  });
  srv.Get(R"(/api/entries/([^/]+))", [=](const httplib::Request& req, httplib::Response& res) {
    reply(res, st->entry(req.matches[1]));
  });
  srv.Post("/api/ratings", [=](const httplib::Request& req, httplib::Response& res) {
    reply(res, st->submit_rating(req.body));
  });
  srv.Get("/api/pairs/next", [=](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> value;
    if (req.has_param("value")) value = req.get_param_value("value");
    reply(res, st->next_pair(value));
  });
  srv.Post("/api/pairs", [=](const httplib::Request& req, httplib::Response& res) {
    reply(res, st->submit_pair(req.body));
  });
  srv.Get("/api/pairs/audit", [=](const httplib::Request&, httplib::Response& res) {
    reply(res, st->pair_audit());
  });
  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      throw InvalidArgument("static directory not found: " + static_dir->string());
    }
  }
}

AdjudicationServer::~AdjudicationServer() { stop(); }

int AdjudicationServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool AdjudicationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AdjudicationServer::stop() { impl_->server.stop(); }

void AdjudicationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace valuerank
