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

#include "majorness/study.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "majorness/errors.hpp"
#include "majorness/random.hpp"
#include "text_util.hpp"

namespace majorness {

using nlohmann::json;
using nlohmann::ordered_json;

void StudyConfig::validate() const {
  if (raters_per_pair < 1) throw ConfigError("raters_per_pair must be >= 1");
  if (ratings_per_item < 1) throw ConfigError("ratings_per_item must be >= 1");
  if (anchor_count < 1) throw ConfigError("anchor_count must be >= 1");
  if (!(excerpt_seconds > 0.0)) throw ConfigError("excerpt_seconds must be > 0");
  if (!(task_expiry_seconds > 0.0)) throw ConfigError("task_expiry_seconds must be > 0");
  if (data_dir.empty()) throw ConfigError("data_dir must be set");
}

StudyConfig study_config_from_json(const json& j, StudyConfig base) {
  if (!j.is_object()) throw ConfigError("study config must be a JSON object");
  try {
    auto read_count = [&](const char* key, std::size_t& out) {
      if (!j.contains(key)) return;
      const auto& v = j.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string(key) + " must be a non-negative integer");
      }
      out = v.get<std::size_t>();
    };
    read_count("raters_per_pair", base.raters_per_pair);
    read_count("ratings_per_item", base.ratings_per_item);
    read_count("anchor_count", base.anchor_count);
    read_count("all_pairs_max_items", base.all_pairs_max_items);
    read_count("pair_subset_size", base.pair_subset_size);
    if (j.contains("excerpt_seconds")) base.excerpt_seconds = j.at("excerpt_seconds").get<double>();
    if (j.contains("task_expiry_seconds")) base.task_expiry_seconds = j.at("task_expiry_seconds").get<double>();
    if (j.contains("data_dir")) base.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid study config: ") + e.what());
  }
  base.validate();
  return base;
}

ordered_json to_json(const StudyConfig& c) {
  ordered_json j;
  j["raters_per_pair"] = c.raters_per_pair;
  j["ratings_per_item"] = c.ratings_per_item;
  j["anchor_count"] = c.anchor_count;
  j["excerpt_seconds"] = c.excerpt_seconds;
  j["all_pairs_max_items"] = c.all_pairs_max_items;
  j["pair_subset_size"] = c.pair_subset_size;
  j["task_expiry_seconds"] = c.task_expiry_seconds;
  j["seed"] = c.seed;
  return j;
}

std::vector<ItemId> read_item_list(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<ItemId> items;
  std::set<ItemId> seen;
  std::string line;
  while (std::getline(in, line)) {
    const auto id = std::string(detail::trim(line));
    if (id.empty()) continue;
    if (!seen.insert(id).second) throw ValidationError(path.string() + ": duplicate item id " + id);
    items.push_back(id);
  }
  return items;
}

void write_item_list(const std::filesystem::path& path, const std::vector<ItemId>& items) {
  auto out = detail::open_output(path);
  for (const auto& id : items) out << id << '\n';
}

std::vector<std::pair<std::size_t, std::size_t>> schedule_pairs(std::size_t n, const StudyConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (n < 2) return pairs;
  if (n <= config.all_pairs_max_items) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }
  const std::size_t total = n * (n - 1) / 2;
  const std::size_t target = std::clamp<std::size_t>(
      config.pair_subset_size ? config.pair_subset_size : 10 * n, n - 1, total);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  detail::shuffle(order, rng);
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  auto add = [&](std::size_t a, std::size_t b) {
    return chosen.insert({std::min(a, b), std::max(a, b)}).second;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) add(order[i], order[i + 1]);
  while (chosen.size() < target) {
    const auto a = detail::uniform_index(rng, n);
    const auto b = detail::uniform_index(rng, n);
    if (a != b) add(a, b);
  }
  return {chosen.begin(), chosen.end()};
}

std::string_view to_string(TaskKind kind) { return kind == TaskKind::kPair ? "pair" : "placement"; }

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "pair") return TaskKind::kPair;
  if (name == "placement") return TaskKind::kPlacement;
  throw ValidationError("unknown task kind '" + std::string(name) + "'");
}

ordered_json to_json(const TaskAssignment& t) {
  ordered_json j;
  j["task_id"] = t.task_id;
  j["rater"] = t.rater;
  j["kind"] = to_string(t.kind);
  if (t.kind == TaskKind::kPair) {
    j["left"] = t.left;
    j["right"] = t.right;
  } else {
    j["item"] = t.item;
    j["anchors"] = t.anchors;
  }
  j["issued_at"] = t.issued_at;
  return j;
}

Submission submission_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("submission must be a JSON object");
  Submission s;
  if (!j.contains("task_id") || !j.at("task_id").is_string()) throw ValidationError("submission needs a task_id");
  s.task_id = j.at("task_id").get<std::string>();
  const bool has_choice = j.contains("choice");
  const bool has_walk = j.contains("walk");
  if (has_choice == has_walk) throw ValidationError("submission needs exactly one of choice or walk");
  if (has_choice) {
    if (!j.at("choice").is_string()) throw ValidationError("choice must be a string");
    s.choice = choice_from_string(j.at("choice").get<std::string>());
  } else {
    if (!j.at("walk").is_array()) throw ValidationError("walk must be an array");
    std::vector<Judgment> walk;
    for (const auto& step : j.at("walk")) {
      if (!step.is_string()) throw ValidationError("walk entries must be strings");
      walk.push_back(judgment_from_string(step.get<std::string>()));
    }
    s.walk = std::move(walk);
  }
  return s;
}

ordered_json to_json(const Acknowledgement& a) {
  ordered_json j;
  j["task_id"] = a.task_id;
  j["kind"] = to_string(a.kind);
  j["status"] = a.duplicate ? "duplicate" : "accepted";
  j["record"] = ordered_json::parse(a.record);
  return j;
}

Acknowledgement acknowledgement_from_json(const ordered_json& j) {
  Acknowledgement a;
  a.task_id = j.at("task_id").get<std::string>();
  a.kind = task_kind_from_string(j.at("kind").get<std::string>());
  a.duplicate = j.at("status").get<std::string>() == "duplicate";
  a.record = j.at("record").dump();
  return a;
}

ordered_json to_json(const StudyStatus& s) {
  ordered_json j;
  j["items"] = s.items;
  j["pairs"] = s.pairs;
  j["pairs_complete"] = s.pairs_complete;
  j["comparison_records"] = s.comparison_records;
  j["placement_items_complete"] = s.placement_items_complete;
  j["rating_records"] = s.rating_records;
  j["outstanding_pair_tasks"] = s.outstanding_pair_tasks;
  j["outstanding_placement_tasks"] = s.outstanding_placement_tasks;
  j["raters"] = s.raters;
  j["anchors_loaded"] = s.anchors_loaded;
  return j;
}

Timestamp system_clock_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

namespace {

void append_line(const std::filesystem::path& path, const std::string& line) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for appending");
  out << line << '\n';
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace

Study::Study(StudyConfig config, Clock clock)
    : config_(std::move(config)), paths_{config_.data_dir}, clock_(std::move(clock)) {
  config_.validate();
  if (!std::filesystem::exists(paths_.items())) {
    throw ConfigError("no study in " + config_.data_dir.string() + ": items.txt is missing");
  }
  items_ = read_item_list(paths_.items());
  for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i]] = i;
  pairs_ = schedule_pairs(items_.size(), config_);
  for (std::size_t p = 0; p < pairs_.size(); ++p) pair_index_[pairs_[p]] = p;
  pair_done_.assign(pairs_.size(), 0);
  pair_pending_.assign(pairs_.size(), 0);
  item_done_.assign(items_.size(), 0);
  item_pending_.assign(items_.size(), 0);
  load_anchors();
  replay_logs();
}

void Study::load_anchors() {
  if (!std::filesystem::exists(paths_.anchors())) return;
  auto in = detail::open_input(paths_.anchors());
  AnchorSet anchors = read_anchors(in);
  for (const auto& a : anchors.anchors) {
    if (!has_item(a)) throw ValidationError("anchor " + a + " is not an item of the study");
  }
  if (!anchors.anchors.empty()) anchors_ = std::move(anchors);
}

std::size_t Study::unit_key_index(std::size_t a, std::size_t b) const {
  const auto it = pair_index_.find({std::min(a, b), std::max(a, b)});
  return it == pair_index_.end() ? std::numeric_limits<std::size_t>::max() : it->second;
}

void Study::count_comparison(const ComparisonRecord& r) {
  ++comparison_records_;
  raters_.insert(r.rater);
  const auto a = item_index_.find(r.left);
  const auto b = item_index_.find(r.right);
  if (a == item_index_.end() || b == item_index_.end()) return;
  const auto p = unit_key_index(a->second, b->second);
  if (p == std::numeric_limits<std::size_t>::max()) return;
  ++pair_done_[p];
  rater_pairs_.insert({r.rater, p});
}

void Study::count_rating(const RatingRecord& r) {
  ++rating_records_;
  raters_.insert(r.rater);
  const auto it = item_index_.find(r.item);
  if (it == item_index_.end()) return;
  ++item_done_[it->second];
  rater_items_.insert({r.rater, it->second});
}

void Study::replay_logs() {
  // Records are replayed one line at a time so a torn final line is skipped.
  if (std::filesystem::exists(paths_.comparisons())) {
    auto in = detail::open_input(paths_.comparisons());
    for (const auto& r : ingest_comparisons(in).set.records) count_comparison(r);
  }
  if (std::filesystem::exists(paths_.ratings())) {
    auto in = detail::open_input(paths_.ratings());
    for (const auto& r : read_rating_records(in).records) count_rating(r);
  }
  if (std::filesystem::exists(paths_.journal())) {
    auto in = detail::open_input(paths_.journal());
    std::string line;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      try {
        auto ack = acknowledgement_from_json(ordered_json::parse(line));
        acks_[ack.task_id] = std::move(ack);
      } catch (const std::exception&) {
        // Torn write from an interrupted append.
      }
    }
  }
}

void Study::expire_locked(Timestamp now) {
  for (auto it = outstanding_.begin(); it != outstanding_.end();) {
    const auto& o = it->second;
    if (now - o.task.issued_at < config_.task_expiry_seconds) {
      ++it;
      continue;
    }
    // The unit returns to the pool; the rater keeps the (rater, unit) mark so
    // the same combination is never assigned twice.
    if (o.task.kind == TaskKind::kPair) {
      --pair_pending_[o.unit];
    } else {
      --item_pending_[o.unit];
    }
    held_.erase({o.task.rater, o.task.kind});
    it = outstanding_.erase(it);
  }
}

std::optional<TaskAssignment> Study::issue_locked(const RaterId& rater, TaskKind kind, Timestamp now) {
  const bool pair = kind == TaskKind::kPair;
  if (!pair && !anchors_) {
    throw StateError("placement tasks need anchors; run the anchors stage first");
  }
  const auto& done = pair ? pair_done_ : item_done_;
  const auto& pending = pair ? pair_pending_ : item_pending_;
  const auto& taken = pair ? rater_pairs_ : rater_items_;
  const std::size_t target = pair ? config_.raters_per_pair : config_.ratings_per_item;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::size_t best_cover = target;
  for (std::size_t u = 0; u < done.size(); ++u) {
    const std::size_t cover = done[u] + pending[u];
    if (cover >= best_cover || taken.contains({rater, u})) continue;
    best = u;
    best_cover = cover;
    if (cover == 0) break;
  }
  if (best == std::numeric_limits<std::size_t>::max()) return std::nullopt;

  TaskAssignment task;
  task.rater = rater;
  task.kind = kind;
  task.issued_at = now;
  std::string key = rater;
  key += '\x1f';
  key += to_string(kind);
  key += '\x1f';
  if (pair) {
    const auto [a, b] = pairs_[best];
    key += items_[a] + '\x1f' + items_[b];
  } else {
    key += items_[best];
  }
  task.task_id = detail::hex64(detail::fnv1a(key, detail::fnv1a(std::to_string(config_.seed))));
  if (pair) {
    const auto [a, b] = pairs_[best];
    // Presentation side alternates with the task id.
    const bool swap = (detail::fnv1a(task.task_id) & 1U) != 0;
    task.left = items_[swap ? b : a];
    task.right = items_[swap ? a : b];
    ++pair_pending_[best];
    rater_pairs_.insert({rater, best});
  } else {
    task.item = items_[best];
    task.anchors = anchors_->anchors;
    ++item_pending_[best];
    rater_items_.insert({rater, best});
  }
  outstanding_[task.task_id] = {task, best};
  held_[{rater, kind}] = task.task_id;
  return task;
}

std::optional<TaskAssignment> Study::next_task(const RaterId& rater, TaskKind kind) {
  if (rater.empty()) throw ValidationError("rater id must not be empty");
  const Timestamp now = clock_();
  std::lock_guard lock(mutex_);
  expire_locked(now);
  if (const auto it = held_.find({rater, kind}); it != held_.end()) {
    return outstanding_.at(it->second).task;
  }
  return issue_locked(rater, kind, now);
}

Acknowledgement Study::submit(const Submission& submission) {
  const Timestamp now = clock_();
  std::lock_guard lock(mutex_);
  if (const auto it = acks_.find(submission.task_id); it != acks_.end()) {
    Acknowledgement ack = it->second;
    ack.duplicate = true;
    return ack;
  }
  expire_locked(now);
  const auto it = outstanding_.find(submission.task_id);
  if (it == outstanding_.end()) {
    throw TaskRejectedError("unknown or expired task " + submission.task_id);
  }
  const Outstanding& o = it->second;
  const TaskAssignment& task = o.task;

  Acknowledgement ack;
  ack.task_id = task.task_id;
  ack.kind = task.kind;
  if (task.kind == TaskKind::kPair) {
    if (!submission.choice || submission.walk) throw ValidationError("pair task expects a choice");
    const ComparisonRecord record{task.rater, task.left, task.right, *submission.choice, now};
    ack.record = to_json_line(record);
    append_line(paths_.comparisons(), ack.record);
    --pair_pending_[o.unit];
    count_comparison(record);
  } else {
    if (!submission.walk || submission.choice) throw ValidationError("placement task expects a walk");
    const auto session = replay_walk(task.item, *anchors_, *submission.walk);
    RatingRecord record;
    record.rater = task.rater;
    record.item = task.item;
    record.slot = *session.slot();
    record.rating = rating_from_placement(record.slot, anchors_->anchors.size());
    record.walk = session.judgments();
    record.timestamp = now;
    record.self_comparison = session.self_comparison();
    ack.record = to_json_line(record);
    append_line(paths_.ratings(), ack.record);
    --item_pending_[o.unit];
    count_rating(record);
  }
  append_line(paths_.journal(), to_json(ack).dump());
  held_.erase({task.rater, task.kind});
  outstanding_.erase(it);
  acks_[ack.task_id] = ack;
  return ack;
}

StudyStatus Study::status() const {
  std::lock_guard lock(mutex_);
  StudyStatus s;
  s.items = items_.size();
  s.pairs = pairs_.size();
  s.pairs_complete = static_cast<std::size_t>(std::count_if(
      pair_done_.begin(), pair_done_.end(), [&](std::size_t c) { return c >= config_.raters_per_pair; }));
  s.comparison_records = comparison_records_;
  s.placement_items_complete = static_cast<std::size_t>(std::count_if(
      item_done_.begin(), item_done_.end(), [&](std::size_t c) { return c >= config_.ratings_per_item; }));
  s.rating_records = rating_records_;
  for (const auto& [id, o] : outstanding_) {
    (o.task.kind == TaskKind::kPair ? s.outstanding_pair_tasks : s.outstanding_placement_tasks)++;
  }
  s.raters = raters_.size();
  s.anchors_loaded = anchors_.has_value();
  return s;
}

std::vector<std::size_t> Study::pair_coverage() const {
  std::lock_guard lock(mutex_);
  return pair_done_;
}

}  // namespace majorness
