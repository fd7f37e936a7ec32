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
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "majorness/ranking.hpp"
#include "majorness/types.hpp"

namespace majorness {

// Outcome of comparing the item being placed against the current anchor.
enum class Judgment { kItemMoreMinor, kItemLessMinor };

std::string_view to_string(Judgment judgment);
Judgment judgment_from_string(std::string_view name);

enum class WalkOrder { kFromMostMajor, kFromMostMinor };
// Linear follows the rater protocol; binary bisects the anchor list and gives
// the same slot for any judge that is consistent with a single latent value.
enum class WalkMode { kLinear, kBinary };

enum class SessionState { kActive, kPlaced };

// State machine for placing one item on the anchored scale. The slot is the
// number of anchors the item exceeds in majorness (0..K).
class PlacementSession {
 public:
  PlacementSession(ItemId item_id, AnchorSet anchors, WalkOrder order, WalkMode mode);

  const ItemId& item_id() const { return item_id_; }
  const AnchorSet& anchors() const { return anchors_; }
  WalkOrder order() const { return order_; }
  WalkMode mode() const { return mode_; }
  SessionState state() const { return state_; }
  // Position in the walk (0-based step counter for linear walks).
  std::size_t cursor() const { return cursor_; }
  // Index into anchors() (ascending majorness) of the anchor to compare next.
  std::size_t current_anchor_index() const;
  const ItemId& current_anchor() const { return anchors_.anchors.at(current_anchor_index()); }
  const std::vector<Judgment>& judgments() const { return judgments_; }
  // Set once placed.
  std::optional<std::size_t> slot() const { return slot_; }
  // The item being placed is itself one of the anchors.
  bool self_comparison() const { return self_comparison_; }

  // Throws StateError once the session is placed.
  void step(Judgment judgment);

 private:
  void place(std::size_t slot);

  ItemId item_id_;
  AnchorSet anchors_;
  WalkOrder order_;
  WalkMode mode_;
  SessionState state_ = SessionState::kActive;
  std::size_t cursor_ = 0;
  // Binary walks keep the candidate slot interval [lo_, hi_].
  std::size_t lo_ = 0;
  std::size_t hi_ = 0;
  std::vector<Judgment> judgments_;
  std::optional<std::size_t> slot_;
  bool self_comparison_ = false;
};

// Throws ParameterError for an empty anchor set.
PlacementSession start_placement(const ItemId& item_id, const AnchorSet& anchors,
                                 WalkOrder order = WalkOrder::kFromMostMajor,
                                 WalkMode mode = WalkMode::kLinear);

PlacementSession step_placement(PlacementSession session, Judgment judgment);

// Replays a complete walk; throws ValidationError if a judgment arrives after
// placement or the walk ends before the item is placed.
PlacementSession replay_walk(const ItemId& item_id, const AnchorSet& anchors,
                             const std::vector<Judgment>& walk,
                             WalkOrder order = WalkOrder::kFromMostMajor,
                             WalkMode mode = WalkMode::kLinear);

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 10;

// clamp(slot, 1, 10); slot must lie in [0, anchor_count].
int rating_from_placement(std::size_t slot, std::size_t anchor_count = 10);

struct RatingRecord {
  RaterId rater;
  ItemId item;
  int rating = kMinRating;
  std::size_t slot = 0;
  std::vector<Judgment> walk;
  Timestamp timestamp = 0.0;
  bool self_comparison = false;
};

// {"rater","item","rating","slot","walk","ts"}; "self" is appended only when set.
std::string to_json_line(const RatingRecord& record);
RatingRecord rating_record_from_json_line(std::string_view line);

struct RatingIngestResult {
  std::vector<RatingRecord> records;
  std::size_t malformed_skipped = 0;
};
RatingIngestResult read_rating_records(std::istream& in);

struct ItemRatingSummary {
  ItemId item_id;
  double mean_rating = 0.0;
  std::size_t n_ratings = 0;
  double std = 0.0;
};

// Mean and sample standard deviation per item (std = 0 for a single rating),
// sorted by item id.
std::vector<ItemRatingSummary> aggregate_ratings(const std::vector<RatingRecord>& records);

void write_summaries_csv(std::ostream& out, const std::vector<ItemRatingSummary>& summaries);
std::vector<ItemRatingSummary> read_summaries_csv(std::istream& in);

}  // namespace majorness
