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

#include "majorness/placement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

#include "majorness/errors.hpp"
#include "text_util.hpp"

namespace majorness {

std::string_view to_string(Judgment judgment) {
  return judgment == Judgment::kItemMoreMinor ? "item_more_minor" : "item_less_minor";
}

Judgment judgment_from_string(std::string_view name) {
  if (name == "item_more_minor") return Judgment::kItemMoreMinor;
  if (name == "item_less_minor") return Judgment::kItemLessMinor;
  throw ValidationError("unknown judgment '" + std::string(name) + "'");
}

PlacementSession::PlacementSession(ItemId item_id, AnchorSet anchors, WalkOrder order,
                                   WalkMode mode)
    : item_id_(std::move(item_id)), anchors_(std::move(anchors)), order_(order), mode_(mode) {
  if (anchors_.anchors.empty()) throw ParameterError("placement needs a nonempty anchor set");
  hi_ = anchors_.size();
  self_comparison_ = std::find(anchors_.anchors.begin(), anchors_.anchors.end(), item_id_) !=
                     anchors_.anchors.end();
}

std::size_t PlacementSession::current_anchor_index() const {
  if (state_ != SessionState::kActive) throw StateError("session for '" + item_id_ + "' is placed");
  const std::size_t k = anchors_.size();
  if (mode_ == WalkMode::kBinary) return (lo_ + hi_) / 2;
  return order_ == WalkOrder::kFromMostMajor ? k - 1 - cursor_ : cursor_;
}

void PlacementSession::place(std::size_t slot) {
  slot_ = slot;
  state_ = SessionState::kPlaced;
}

void PlacementSession::step(Judgment judgment) {
  if (state_ != SessionState::kActive) {
    throw StateError("placement of '" + item_id_ + "' already finished at slot " +
                     std::to_string(*slot_));
  }
  const std::size_t k = anchors_.size();
  const bool item_beats_anchor = judgment == Judgment::kItemLessMinor;
  judgments_.push_back(judgment);

  if (mode_ == WalkMode::kBinary) {
    const std::size_t mid = (lo_ + hi_) / 2;
    if (item_beats_anchor) {
      lo_ = mid + 1;
    } else {
      hi_ = mid;
    }
    ++cursor_;
    if (lo_ == hi_) place(lo_);
    return;
  }

  if (order_ == WalkOrder::kFromMostMajor) {
    if (item_beats_anchor) {
      place(k - cursor_);
    } else if (++cursor_ == k) {
      place(0);
    }
  } else {
    if (!item_beats_anchor) {
      place(cursor_);
    } else if (++cursor_ == k) {
      place(k);
    }
  }
}

PlacementSession start_placement(const ItemId& item_id, const AnchorSet& anchors,
                                 WalkOrder order, WalkMode mode) {
  return PlacementSession(item_id, anchors, order, mode);
}

PlacementSession step_placement(PlacementSession session, Judgment judgment) {
  session.step(judgment);
  return session;
}

PlacementSession replay_walk(const ItemId& item_id, const AnchorSet& anchors,
                             const std::vector<Judgment>& walk, WalkOrder order, WalkMode mode) {
  auto session = start_placement(item_id, anchors, order, mode);
  for (std::size_t i = 0; i < walk.size(); ++i) {
    if (session.state() == SessionState::kPlaced) {
      throw ValidationError("walk has " + std::to_string(walk.size() - i) +
                            " judgment(s) after the item was placed");
    }
    session.step(walk[i]);
  }
  if (session.state() != SessionState::kPlaced) {
    throw ValidationError("walk of " + std::to_string(walk.size()) +
                          " judgment(s) ends before the item is placed");
  }
  return session;
}

int rating_from_placement(std::size_t slot, std::size_t anchor_count) {
  if (slot > anchor_count) {
    throw ParameterError("slot " + std::to_string(slot) + " outside [0, " +
                         std::to_string(anchor_count) + "]");
  }
  return std::clamp(static_cast<int>(slot), kMinRating, kMaxRating);
}

std::string to_json_line(const RatingRecord& record) {
  nlohmann::ordered_json j;
  j["rater"] = record.rater;
  j["item"] = record.item;
  j["rating"] = record.rating;
  j["slot"] = record.slot;
  auto walk = nlohmann::ordered_json::array();
  for (auto judgment : record.walk) walk.push_back(std::string(to_string(judgment)));
  j["walk"] = std::move(walk);
  j["ts"] = record.timestamp;
  if (record.self_comparison) j["self"] = true;
  return j.dump();
}

RatingRecord rating_record_from_json_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) throw ValidationError("rating record is not a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ValidationError(std::string("rating record lacks '") + key + "'");
    return j[key];
  };
  RatingRecord r;
  try {
    r.rater = require("rater").get<std::string>();
    r.item = require("item").get<std::string>();
    r.rating = require("rating").get<int>();
    r.slot = require("slot").get<std::size_t>();
    for (const auto& step : require("walk")) r.walk.push_back(judgment_from_string(step.get<std::string>()));
    r.timestamp = require("ts").get<double>();
    if (j.contains("self")) r.self_comparison = j["self"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rating record has a mistyped field: ") + e.what());
  }
  if (r.item.empty()) throw ValidationError("rating record has an empty item id");
  if (r.rating < kMinRating || r.rating > kMaxRating) {
    throw ValidationError("rating " + std::to_string(r.rating) + " outside 1..10");
  }
  if (r.rating != std::clamp(static_cast<int>(r.slot), kMinRating, kMaxRating)) {
    throw ValidationError("rating " + std::to_string(r.rating) + " inconsistent with slot " +
                          std::to_string(r.slot));
  }
  return r;
}

RatingIngestResult read_rating_records(std::istream& in) {
  RatingIngestResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    try {
      result.records.push_back(rating_record_from_json_line(line));
    } catch (const ValidationError&) {
      ++result.malformed_skipped;
    }
  }
  return result;
}

std::vector<ItemRatingSummary> aggregate_ratings(const std::vector<RatingRecord>& records) {
  std::map<ItemId, std::vector<double>> by_item;
  for (const auto& r : records) by_item[r.item].push_back(static_cast<double>(r.rating));
  std::vector<ItemRatingSummary> out;
  out.reserve(by_item.size());
  for (const auto& [item, values] : by_item) {
    const Eigen::Map<const VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    ItemRatingSummary s;
    s.item_id = item;
    s.n_ratings = values.size();
    s.mean_rating = v.mean();
    s.std = values.size() > 1
                ? std::sqrt((v.array() - s.mean_rating).square().sum() /
                            static_cast<double>(values.size() - 1))
                : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

void write_summaries_csv(std::ostream& out, const std::vector<ItemRatingSummary>& summaries) {
  out << "item_id,mean,std,n\n";
  for (const auto& s : summaries) {
    out << s.item_id << ',' << detail::format_double(s.mean_rating) << ','
        << detail::format_double(s.std) << ',' << s.n_ratings << '\n';
  }
}

std::vector<ItemRatingSummary> read_summaries_csv(std::istream& in) {
  std::vector<ItemRatingSummary> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "item_id") continue;
    }
    if (f.size() != 4) throw ValidationError("summary CSV row needs 4 fields: " + line);
    ItemRatingSummary s;
    s.item_id = f[0];
    s.mean_rating = detail::parse_double_or_throw(f[1], "mean");
    s.std = detail::parse_double_or_throw(f[2], "std");
    s.n_ratings = static_cast<std::size_t>(detail::parse_double_or_throw(f[3], "n"));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace majorness
