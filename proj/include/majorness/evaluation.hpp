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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "majorness/audio.hpp"
#include "majorness/placement.hpp"
#include "majorness/stats.hpp"
#include "majorness/types.hpp"

namespace majorness {

// P(major | x) = logistic(intercept + slope * x).
struct LogisticModel {
  double intercept = 0.0;
  double slope = 0.0;

  double probability(double x) const { return logistic(intercept + slope * x); }
  int predict(double x) const { return probability(x) >= 0.5 ? 1 : 0; }
  // Feature value where P = 0.5; NaN for a flat model.
  double decision_boundary() const { return slope == 0.0 ? std::nan("") : -intercept / slope; }
};

struct LogisticFitConfig {
  double tol = 1e-8;
  std::size_t max_iter = 20000;
};

// Mean Bernoulli log-likelihood; labels are 0/1.
double logistic_log_likelihood(const LogisticModel& model, std::span<const double> x, std::span<const int> labels);

// Full-batch gradient ascent with step halving on the mean log-likelihood, on
// an internally standardized feature. No regularization; separable data stop
// at max_iter with a steep but finite slope.
LogisticModel fit_logistic(std::span<const double> x, std::span<const int> labels,
                           const LogisticFitConfig& config = {});

struct ItemPrediction {
  ItemId item_id;
  double feature = 0.0;
  std::optional<int> label;
  // Out-of-fold P(major).
  double prediction = 0.0;
  int predicted_label = 0;
  std::size_t fold = 0;
};

struct EvalReport {
  // Correlation between feature and label (point-biserial) or target; NaN if undefined.
  double pearson_r = 0.0;
  double cv_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::vector<ItemPrediction> per_item;
  std::vector<ItemId> mistakes;
};

// Stratified k-fold cross-validated 1-D logistic regression. Labels are 1
// (major) / 0 (minor); both classes must be present and n >= folds.
EvalReport logistic_cv(std::span<const double> feature, std::span<const int> labels,
                       std::size_t folds = 10, std::uint64_t seed = 0,
                       std::span<const ItemId> ids = {});

enum class Mode { kMinor = 0, kMajor = 1 };

struct LabeledItem {
  ItemId item_id;
  std::filesystem::path audio_path;
  Mode label = Mode::kMajor;
};

struct LabeledCorpus {
  std::vector<LabeledItem> items;
};

// CSV item_id,path,label with label "major"/"minor"; relative paths resolve
// against the CSV's directory and must exist.
LabeledCorpus read_labeled_corpus(const std::filesystem::path& csv_path);
void write_labeled_corpus(const std::filesystem::path& csv_path, const LabeledCorpus& corpus);

using AudioScorer = std::function<double(const AudioBuffer&)>;

// Scores the first clip_seconds of every item, cross-validates a logistic
// regression on the scores, and orders per_item by ascending score.
EvalReport mode_experiment(const LabeledCorpus& corpus, const AudioScorer& scorer,
                           double clip_seconds = 12.0, std::size_t folds = 10, std::uint64_t seed = 0);

// Items left to right by predicted majorness, with misclassifications marked.
std::string figure5_strip(const EvalReport& report);

std::string to_json(const EvalReport& report);

struct EmotionTable {
  std::vector<std::string> dimensions;
  std::map<ItemId, std::vector<double>> rows;
};

// CSV: item_id followed by one column per emotion dimension.
EmotionTable read_emotion_table(std::istream& in);

struct EmotionCorrelation {
  std::map<std::string, double> pearson_r;
  std::size_t join_size = 0;
};

// Pearson r between mean rating and each dimension over items present in both
// tables; InsufficientDataError when fewer than 3 items join.
EmotionCorrelation emotion_correlation(const std::vector<ItemRatingSummary>& summaries,
                                       const EmotionTable& emotions);

}  // namespace majorness
