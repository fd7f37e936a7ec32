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
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "majorness/types.hpp"

namespace majorness {

enum class Choice { kLeftMoreMajor, kRightMoreMajor, kEqual };

std::string_view to_string(Choice choice);
// Throws ValidationError for anything but the three wire names.
Choice choice_from_string(std::string_view name);

struct ComparisonRecord {
  RaterId rater;
  ItemId left;
  ItemId right;
  Choice choice = Choice::kEqual;
  Timestamp timestamp = 0.0;

  friend bool operator==(const ComparisonRecord&, const ComparisonRecord&) = default;
  friend auto operator<=>(const ComparisonRecord&, const ComparisonRecord&) = default;
};

// One JSON object per line: {"rater","left","right","choice","ts"}.
std::string to_json_line(const ComparisonRecord& record);

struct ComparisonSet {
  std::vector<ComparisonRecord> records;
  std::set<ItemId> items;

  // Adds a record and its items. Does not deduplicate.
  void add(ComparisonRecord record);
};

struct IngestResult {
  ComparisonSet set;
  std::size_t malformed_skipped = 0;
  std::size_t duplicates_dropped = 0;
};

// Reads JSON-lines comparison events. Lines that fail to parse against the
// record schema are skipped and counted; a record with an empty item id (or
// left == right) raises ValidationError. Identical records collapse to one.
IngestResult ingest_comparisons(std::istream& in);
IngestResult ingest_comparisons(const std::filesystem::path& path);
IngestResult ingest_comparisons(const std::vector<ComparisonRecord>& events);

// Connected components of the undirected comparison graph, each sorted, the
// list ordered by smallest member.
std::vector<std::vector<ItemId>> connected_components(const ComparisonSet& set);

enum class TiePolicy { kHalf, kIgnore };

struct BradleyTerryConfig {
  std::size_t max_iter = 10000;
  double tol = 1e-9;
  TiePolicy tie_policy = TiePolicy::kHalf;
  // Pseudo-wins added in both directions on every observed pair. Zero turns
  // regularization off, in which case the win graph must be strongly
  // connected for the maximizer to exist.
  double regularization = 0.5;
};

struct RankingEntry {
  ItemId item_id;
  double theta = 0.0;
  std::size_t rank = 0;
};

struct Ranking {
  // Sorted by theta descending; rank 1 is the most major item.
  std::vector<RankingEntry> entries;
  // Data log-likelihood at the fitted theta (ties as half-wins, no pseudo-wins).
  double log_likelihood = 0.0;
  std::size_t iterations = 0;

  std::size_t size() const { return entries.size(); }
  // Content fingerprint, stable across runs.
  std::string fingerprint() const;
};

// Bradley-Terry maximum likelihood via minorization-maximization, with
// P(i beats j) = exp(theta_i) / (exp(theta_i) + exp(theta_j)) and theta
// normalized to zero sum.
Ranking fit_bradley_terry(const ComparisonSet& set, const BradleyTerryConfig& config = {});

// Log-likelihood of theta under the same weighting fit_bradley_terry uses:
// ties split as half-wins (or dropped), plus `regularization` pseudo-wins per
// direction on every observed pair.
double bradley_terry_log_likelihood(const ComparisonSet& set,
                                    const std::vector<ItemId>& items,
                                    const VectorXd& theta,
                                    TiePolicy tie_policy, double regularization);

struct AnchorSet {
  // Ascending in majorness.
  std::vector<ItemId> anchors;
  std::string source_ranking_id;

  std::size_t size() const { return anchors.size(); }
};

// Picks k items at ranks round((i - 0.5) * N / k), i = 1..k.
AnchorSet select_anchors(const Ranking& ranking, std::size_t k = 10);

void write_ranking_csv(std::ostream& out, const Ranking& ranking);
Ranking read_ranking_csv(std::istream& in);

void write_anchors(std::ostream& out, const AnchorSet& anchors);
AnchorSet read_anchors(std::istream& in);

}  // namespace majorness
