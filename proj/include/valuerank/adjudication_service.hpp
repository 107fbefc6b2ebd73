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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/vidb.hpp"

namespace valuerank {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// DB state behind the adjudication API.
///
/// Human ratings are appended to a sidecar log (`<db>.ratings.jsonl`) and
/// pairwise judgments to `<db>.pairs.jsonl`; the DB file is rewritten
/// atomically after every accepted rating. Reads may run concurrently, writes
/// are serialized.
class AdjudicationStore {
 public:
  explicit AdjudicationStore(std::filesystem::path db_path,
                             std::map<std::string, std::string> definitions = {},
                             io::BeforeRename before_rename = {});

  ApiResponse flags() const;
  ApiResponse entry(const std::string& item_id) const;
  ApiResponse summary() const;
  /// Body: {item_id, rating} or {item_id, accept: true}, optional submission_id.
  ApiResponse submit_rating(const std::string& body);

  /// Pair at the current queue position; `value` narrows the queue.
  ApiResponse next_pair(const std::optional<std::string>& value) const;
  /// Body: {left_id, right_id, winner: "left"|"right", submission_id?}.
  ApiResponse submit_pair(const std::string& body);
  /// Agreement of recorded choices with the DB order.
  ApiResponse pair_audit() const;

  std::filesystem::path ratings_log_path() const;
  std::filesystem::path pairs_log_path() const;
  std::vector<VidbEntry> snapshot() const;

 private:
  struct PairJudgment {
    ItemId left;
    ItemId right;
    bool left_wins = true;
  };

  nlohmann::json entry_json(const VidbEntry& e) const;
  const VidbEntry* find_locked(const std::string& id) const;
  std::optional<std::pair<std::size_t, std::size_t>> pair_at(
      std::size_t position, const std::optional<std::string>& value) const;
  void replay_logs();

  std::filesystem::path db_path_;
  std::map<std::string, std::string> definitions_;
  io::BeforeRename before_rename_;

  mutable std::shared_mutex mutex_;
  std::vector<VidbEntry> entries_;
  std::map<ItemId, std::size_t> index_;
  std::map<ItemId, std::vector<double>> ratings_;
  std::map<std::string, nlohmann::json> rating_submissions_;
  std::vector<PairJudgment> pairs_;
  std::map<std::string, nlohmann::json> pair_submissions_;
};

/// HTTP front end for an AdjudicationStore.
class AdjudicationServer {
 public:
  AdjudicationServer(std::shared_ptr<AdjudicationStore> store,
                     std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AdjudicationServer();

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Reads {"value": "definition", ...} from a JSON object file.
std::map<std::string, std::string> read_definitions(const std::filesystem::path& path);

}  // namespace valuerank
