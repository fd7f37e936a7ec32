/*
 * Copyright 2026 The Majorness Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "majorness/placement.hpp"
#include "majorness/ranking.hpp"
#include "majorness/types.hpp"

namespace majorness {

struct StudyConfig {
  std::size_t raters_per_pair = 5;
  std::size_t ratings_per_item = 5;
  std::size_t anchor_count = 10;
  double excerpt_seconds = 15.0;
  std::filesystem::path data_dir = "data";
  // Studies up to this size compare all pairs; larger ones use a random
  // connected subset of pair_subset_size pairs (0 = 10 per item).
  std::size_t all_pairs_max_items = 200;
  std::size_t pair_subset_size = 0;
  double task_expiry_seconds = 30.0 * 60.0;
  std::uint64_t seed = 1;

  // Throws ConfigError when a count is zero or a duration non-positive.
  void validate() const;
};

// Reads the keys of StudyConfig from a JSON object; absent keys keep defaults.
StudyConfig study_config_from_json(const nlohmann::json& json, StudyConfig base = {});
nlohmann::ordered_json to_json(const StudyConfig& config);

// Fixed-layout files inside a study directory.
struct StudyPaths {
  std::filesystem::path root;

  std::filesystem::path items() const { return root / "items.txt"; }
  std::filesystem::path audio_dir() const { return root / "audio"; }
  std::filesystem::path audio(const ItemId& id) const { return audio_dir() / (id + ".wav"); }
  std::filesystem::path comparisons() const { return root / "comparisons.jsonl"; }
  std::filesystem::path ratings() const { return root / "ratings.jsonl"; }
  std::filesystem::path journal() const { return root / "study" / "journal.jsonl"; }
  std::filesystem::path latent() const { return root / "latent.csv"; }
  std::filesystem::path labeled() const { return root / "labeled" / "labeled.csv"; }
  std::filesystem::path emotions() const { return root / "emotions.csv"; }
  std::filesystem::path pipeline_dir() const { return root / "pipeline"; }
  std::filesystem::path anchors() const { return pipeline_dir() / "anchors.txt"; }
};

std::vector<ItemId> read_item_list(const std::filesystem::path& path);
void write_item_list(const std::filesystem::path& path, const std::vector<ItemId>& items);

// All pairs for small studies, otherwise a seeded spanning path plus random
// extra pairs, so the comparison graph is always connected.
std::vector<std::pair<std::size_t, std::size_t>> schedule_pairs(std::size_t n_items, const StudyConfig& config);

enum class TaskKind { kPair, kPlacement };
std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);

struct TaskAssignment {
  std::string task_id;
  RaterId rater;
  TaskKind kind = TaskKind::kPair;
  // Pair tasks.
  ItemId left;
  ItemId right;
  // Placement tasks; anchors ascending in majorness.
  ItemId item;
  std::vector<ItemId> anchors;
  Timestamp issued_at = 0.0;
};

nlohmann::ordered_json to_json(const TaskAssignment& task);

// A rater's answer: a choice for pair tasks, a full walk for placements.
struct Submission {
  std::string task_id;
  std::optional<Choice> choice;
  std::optional<std::vector<Judgment>> walk;
};

// Parses {"task_id", "choice"} or {"task_id", "walk"}; ValidationError otherwise.
Submission submission_from_json(const nlohmann::json& json);

struct Acknowledgement {
  std::string task_id;
  TaskKind kind = TaskKind::kPair;
  // Set when the task had already been submitted; nothing was appended.
  bool duplicate = false;
  // The appended record as a JSON line.
  std::string record;
};

nlohmann::ordered_json to_json(const Acknowledgement& ack);
// Keeps the record's key order.
Acknowledgement acknowledgement_from_json(const nlohmann::ordered_json& json);

struct StudyStatus {
  std::size_t items = 0;
  std::size_t pairs = 0;
  std::size_t pairs_complete = 0;
  std::size_t comparison_records = 0;
  std::size_t placement_items_complete = 0;
  std::size_t rating_records = 0;
  std::size_t outstanding_pair_tasks = 0;
  std::size_t outstanding_placement_tasks = 0;
  std::size_t raters = 0;
  bool anchors_loaded = false;
};

nlohmann::ordered_json to_json(const StudyStatus& status);

using Clock = std::function<Timestamp()>;
Timestamp system_clock_seconds();

// Task scheduler and append-only annotation log for one study directory.
// All public members are safe to call concurrently; a single mutex serializes
// bookkeeping and log appends.
class Study {
 public:
  // Opens the study in config.data_dir, replaying existing logs. items.txt
  // must exist; pipeline/anchors.txt enables placement tasks.
  explicit Study(StudyConfig config, Clock clock = system_clock_seconds);

  const StudyConfig& config() const { return config_; }
  const StudyPaths& paths() const { return paths_; }
  const std::vector<ItemId>& items() const { return items_; }
  bool has_item(const ItemId& id) const { return item_index_.contains(id); }

  // The rater's outstanding task of this kind, else a new assignment for the
  // least-covered eligible unit; nullopt once nothing is left for this rater.
  std::optional<TaskAssignment> next_task(const RaterId& rater, TaskKind kind);

  // Appends exactly one record per task. Replays the original acknowledgement
  // for repeated task ids. TaskRejectedError for unknown or expired tasks,
  // ValidationError for payloads that do not fit the task.
  Acknowledgement submit(const Submission& submission);

  StudyStatus status() const;

  // Completed submissions per pair, in schedule order.
  std::vector<std::size_t> pair_coverage() const;

 private:
  struct Outstanding {
    TaskAssignment task;
    std::size_t unit = 0;
  };

  void load_anchors();
  void replay_logs();
  void count_comparison(const ComparisonRecord& record);
  void count_rating(const RatingRecord& record);
  void expire_locked(Timestamp now);
  std::optional<TaskAssignment> issue_locked(const RaterId& rater, TaskKind kind, Timestamp now);
  std::size_t unit_key_index(std::size_t a, std::size_t b) const;

  StudyConfig config_;
  StudyPaths paths_;
  Clock clock_;
  std::vector<ItemId> items_;
  std::map<ItemId, std::size_t> item_index_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_index_;
  std::optional<AnchorSet> anchors_;

  mutable std::mutex mutex_;
  // Completed submissions per unit (pair index or item index).
  std::vector<std::size_t> pair_done_;
  std::vector<std::size_t> item_done_;
  std::vector<std::size_t> pair_pending_;
  std::vector<std::size_t> item_pending_;
  // Units each rater has completed or holds.
  std::set<std::pair<RaterId, std::size_t>> rater_pairs_;
  std::set<std::pair<RaterId, std::size_t>> rater_items_;
  std::map<std::string, Outstanding> outstanding_;
  std::map<std::pair<RaterId, TaskKind>, std::string> held_;
  std::map<std::string, Acknowledgement> acks_;
  std::set<RaterId> raters_;
  std::size_t comparison_records_ = 0;
  std::size_t rating_records_ = 0;
};

}  // namespace majorness
