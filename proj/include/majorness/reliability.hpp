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
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "majorness/placement.hpp"
#include "majorness/types.hpp"

namespace majorness {

// items x raters grid of ratings; NaN marks a missing cell.
struct RaterMatrix {
  std::vector<RaterId> raters;
  std::vector<ItemId> items;
  MatrixXd values;

  Eigen::Index n_items() const { return values.rows(); }
  Eigen::Index n_raters() const { return values.cols(); }
  static bool missing(double v) { return std::isnan(v); }

  // Drops the given rater columns.
  RaterMatrix without_raters(const std::vector<RaterId>& removed) const;
};

// Throws ValidationError if a present value is outside [1, 10], an item row is
// empty, or the shape disagrees with the id lists.
void validate(const RaterMatrix& matrix);

// Repeated ratings of one item by one rater are averaged.
RaterMatrix rater_matrix_from_ratings(const std::vector<RatingRecord>& records);

// Header: item_id,<rater ids...>; empty cells are missing.
void write_rater_matrix_csv(std::ostream& out, const RaterMatrix& matrix);
RaterMatrix read_rater_matrix_csv(std::istream& in);

// Cronbach's alpha over the items every rater scored (complete cases).
// Returns nullopt when the total-score variance is zero.
std::optional<double> cronbach_alpha(const RaterMatrix& matrix);

enum class KrippendorffMetric { kInterval, kOrdinal };

// Krippendorff's alpha from the coincidence matrix; tolerates missing cells.
double krippendorff_alpha(const RaterMatrix& matrix,
                          KrippendorffMetric metric = KrippendorffMetric::kInterval);

struct FilterPolicy {
  double min_corr = 0.2;
  double max_removed_frac = 0.5;
};

struct ReliabilityReport {
  std::optional<double> cronbach_alpha;
  // Set when cronbach_alpha could not be computed; explains why.
  std::string cronbach_note;
  double krippendorff_alpha = 0.0;
  std::optional<double> cronbach_alpha_before;
  double krippendorff_alpha_before = 0.0;
  std::vector<RaterId> removed_raters;
  // Correlation with the mean of the other raters: for kept raters from the
  // final round, for removed raters at the time of removal. NaN if undefined.
  std::map<RaterId, double> per_rater_agreement;
  FilterPolicy policy;
};

std::string to_json(const ReliabilityReport& report);

// Pearson correlation of one rater with the mean of the other active raters
// over items they share. NaN when fewer than 3 shared items or zero variance.
double rater_agreement(const RaterMatrix& matrix, Eigen::Index rater,
                       const std::vector<bool>& active);

struct FilterResult {
  RaterMatrix kept;
  ReliabilityReport report;
};

// Iteratively removes the least-agreeing rater while its agreement is below
// policy.min_corr and the removed fraction stays within max_removed_frac.
FilterResult filter_raters(const RaterMatrix& matrix, const FilterPolicy& policy = {});

}  // namespace majorness
