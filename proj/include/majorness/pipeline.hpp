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
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "majorness/model.hpp"
#include "majorness/ranking.hpp"
#include "majorness/reliability.hpp"
#include "majorness/study.hpp"

namespace majorness {

inline constexpr int kPipelineFormatVersion = 1;

struct PipelineConfig {
  StudyConfig study;
  std::uint64_t seed = 1;
  BradleyTerryConfig bradley_terry;
  FilterPolicy filter;
  ArchConfig arch;
  TrainConfig train = {.learning_rate = 3e-3, .batch_size = 16, .epochs = 60};
  // Fraction of items held out from training for evaluation.
  double test_fraction = 0.2;
  std::size_t folds = 10;
  double mode_clip_seconds = 12.0;
};

// Study keys at the top level (see study_config_from_json), optional
// "train": {learning_rate, batch_size, epochs}, "filter": {min_corr,
// max_removed_frac}, "test_fraction", "folds".
PipelineConfig pipeline_config_from_json(const nlohmann::json& json, PipelineConfig base = {});

enum class Stage { kRank, kAnchors, kReliability, kFeatures, kTrain, kEvaluate, kAll };
std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

// Runs one stage (or all, in order) against config.study.data_dir, writes its
// outputs under pipeline/ and returns the summary also written to
// pipeline/<stage>.summary.json. Throws MissingPrerequisiteError naming the
// stage to run first when inputs are absent. Outputs depend only on inputs
// and config.
nlohmann::ordered_json run_stage(const PipelineConfig& config, Stage stage);

struct SimulationConfig {
  std::size_t n_items = 200;
  std::size_t pair_raters = 80;
  double pair_noise = 0.1;
  double bias_sigma = 0.03;
  // Dense placement pool: study.ratings_per_item raters, the last
  // `unreliable_raters` of which answer with unreliable_noise.
  double placement_noise = 0.1;
  std::size_t unreliable_raters = 1;
  double unreliable_noise = 3.0;
  std::size_t n_major = 48;
  std::size_t n_minor = 48;
};

SimulationConfig simulation_config_from_json(const nlohmann::json& json, SimulationConfig base = {});

// Writes a complete simulated study into config.study.data_dir: items.txt,
// audio/, latent.csv, comparisons.jsonl, ratings.jsonl (placed against the
// anchors from the rank and anchors stages), labeled/ and emotions.csv.
nlohmann::ordered_json simulate_study(const PipelineConfig& config, const SimulationConfig& simulation);

std::map<ItemId, double> read_latent_csv(const std::filesystem::path& path);

}  // namespace majorness
