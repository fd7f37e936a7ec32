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

#include "majorness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "majorness/audio.hpp"
#include "majorness/errors.hpp"
#include "majorness/evaluation.hpp"
#include "majorness/features.hpp"
#include "majorness/keyprofile.hpp"
#include "majorness/random.hpp"
#include "majorness/simulation.hpp"
#include "text_util.hpp"

namespace majorness {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig base) {
  base.study = study_config_from_json(j, base.study);
  try {
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("test_fraction")) base.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("folds")) base.folds = j.at("folds").get<std::size_t>();
    if (j.contains("mode_clip_seconds")) base.mode_clip_seconds = j.at("mode_clip_seconds").get<double>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      if (t.contains("learning_rate")) base.train.learning_rate = t.at("learning_rate").get<double>();
      if (t.contains("batch_size")) base.train.batch_size = t.at("batch_size").get<std::size_t>();
      if (t.contains("epochs")) base.train.epochs = t.at("epochs").get<std::size_t>();
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      if (f.contains("min_corr")) base.filter.min_corr = f.at("min_corr").get<double>();
      if (f.contains("max_removed_frac")) base.filter.max_removed_frac = f.at("max_removed_frac").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  base.train.validate();
  if (!(base.test_fraction > 0.0 && base.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (base.folds < 2) throw ConfigError("folds must be >= 2");
  return base;
}

SimulationConfig simulation_config_from_json(const json& j, SimulationConfig base) {
  try {
    if (j.contains("n_items")) base.n_items = j.at("n_items").get<std::size_t>();
    if (j.contains("pair_raters")) base.pair_raters = j.at("pair_raters").get<std::size_t>();
    if (j.contains("pair_noise")) base.pair_noise = j.at("pair_noise").get<double>();
    if (j.contains("bias_sigma")) base.bias_sigma = j.at("bias_sigma").get<double>();
    if (j.contains("placement_noise")) base.placement_noise = j.at("placement_noise").get<double>();
    if (j.contains("unreliable_raters")) base.unreliable_raters = j.at("unreliable_raters").get<std::size_t>();
    if (j.contains("unreliable_noise")) base.unreliable_noise = j.at("unreliable_noise").get<double>();
    if (j.contains("n_major")) base.n_major = j.at("n_major").get<std::size_t>();
    if (j.contains("n_minor")) base.n_minor = j.at("n_minor").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid simulation config: ") + e.what());
  }
  return base;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kRank: return "rank";
    case Stage::kAnchors: return "anchors";
    case Stage::kReliability: return "reliability";
    case Stage::kFeatures: return "features";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kAll: return "all";
  }
  return "?";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : {Stage::kRank, Stage::kAnchors, Stage::kReliability, Stage::kFeatures, Stage::kTrain,
                  Stage::kEvaluate, Stage::kAll}) {
    if (to_string(s) == name) return s;
  }
  throw ParameterError("unknown stage '" + std::string(name) + "'");
}

std::map<ItemId, double> read_latent_csv(const fs::path& path) {
  auto in = detail::open_input(path);
  std::map<ItemId, double> latent;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw ValidationError(path.string() + ": expected item_id,latent");
    latent[cells[0]] = detail::parse_double_or_throw(cells[1], "latent");
  }
  return latent;
}

namespace {

// Output locations under <data_dir>/pipeline.
struct PipelinePaths {
  fs::path dir;

  fs::path summary(Stage s) const { return dir / (std::string(to_string(s)) + ".summary.json"); }
  fs::path ranking() const { return dir / "ranking.csv"; }
  fs::path anchors() const { return dir / "anchors.txt"; }
  fs::path rater_matrix() const { return dir / "rater_matrix.csv"; }
  fs::path reliability() const { return dir / "reliability.json"; }
  fs::path rating_summary() const { return dir / "ratings_summary.csv"; }
  fs::path features_dir() const { return dir / "features"; }
  fs::path mels(const ItemId& id) const { return features_dir() / (id + ".mels"); }
  fs::path split() const { return dir / "split.csv"; }
  fs::path model() const { return dir / "model.mjrn"; }
  fs::path predictions() const { return dir / "predictions.csv"; }
  fs::path mode_report() const { return dir / "mode_report.json"; }
  fs::path figure5() const { return dir / "figure5.txt"; }
};

ordered_json summary_header(Stage stage) {
  ordered_json j;
  j["format_version"] = kPipelineFormatVersion;
  j["stage"] = to_string(stage);
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

void write_summary(const PipelinePaths& p, Stage stage, const ordered_json& summary) {
  write_text(p.summary(stage), summary.dump(2) + "\n");
}

std::string file_fingerprint(const fs::path& path) { return detail::hex64(detail::fnv1a(detail::read_file(path))); }

void require(const fs::path& path, std::string_view stage, std::string_view first) {
  if (!fs::exists(path)) {
    throw MissingPrerequisiteError(std::string(stage) + ": " + path.string() + " not found; run " +
                                   std::string(first) + " first");
  }
}

ordered_json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::optional<double> try_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  try {
    return pearson(x, y);
  } catch (const InsufficientDataError&) {
  } catch (const UndefinedStatisticError&) {
  }
  return std::nullopt;
}

template <typename Out>
Out read_with(const fs::path& path, Out (*reader)(std::istream&)) {
  auto in = detail::open_input(path);
  return reader(in);
}

ordered_json run_rank(const PipelineConfig& c, const StudyPaths& s, const PipelinePaths& p) {
  require(s.comparisons(), "rank", "`simulate` or collect comparisons with `serve`");
  const auto ingest = ingest_comparisons(s.comparisons());
  if (ingest.set.records.empty()) throw InsufficientDataError("rank: " + s.comparisons().string() + " holds no comparisons");
  const auto ranking = fit_bradley_terry(ingest.set, c.bradley_terry);
  {
    auto out = detail::open_output(p.ranking());
    write_ranking_csv(out, ranking);
  }
  auto j = summary_header(Stage::kRank);
  j["input_fingerprint"] = file_fingerprint(s.comparisons());
  j["records"] = ingest.set.records.size();
  j["items"] = ranking.size();
  j["malformed_skipped"] = ingest.malformed_skipped;
  j["duplicates_dropped"] = ingest.duplicates_dropped;
  j["iterations"] = ranking.iterations;
  j["log_likelihood"] = ranking.log_likelihood;
  j["regularization"] = c.bradley_terry.regularization;
  j["ranking_id"] = ranking.fingerprint();
  return j;
}

ordered_json run_anchors(const PipelineConfig& c, const StudyPaths&, const PipelinePaths& p) {
  require(p.ranking(), "anchors", "the rank stage");
  const auto ranking = read_with(p.ranking(), &read_ranking_csv);
  const auto anchors = select_anchors(ranking, c.study.anchor_count);
  {
    auto out = detail::open_output(p.anchors());
    write_anchors(out, anchors);
  }
  auto j = summary_header(Stage::kAnchors);
  j["ranking_id"] = anchors.source_ranking_id;
  j["k"] = anchors.size();
  j["anchors"] = anchors.anchors;
  return j;
}

ordered_json run_reliability(const PipelineConfig& c, const StudyPaths& s, const PipelinePaths& p) {
  require(s.ratings(), "reliability", "`simulate` or collect placements with `serve`");
  const auto ingest = read_with(s.ratings(), &read_rating_records);
  if (ingest.records.empty()) throw InsufficientDataError("reliability: " + s.ratings().string() + " holds no ratings");
  const auto matrix = rater_matrix_from_ratings(ingest.records);
  {
    auto out = detail::open_output(p.rater_matrix());
    write_rater_matrix_csv(out, matrix);
  }
  FilterResult filtered;
  std::string filter_note;
  if (matrix.n_raters() >= 3) {
    filtered = filter_raters(matrix, c.filter);
  } else {
    // Too few raters to judge disagreement: report alphas unfiltered.
    filter_note = "rater filtering skipped: fewer than 3 raters";
    filtered.kept = matrix;
    filtered.report.policy = c.filter;
    try {
      filtered.report.cronbach_alpha = cronbach_alpha(matrix);
    } catch (const Error& e) {
      filtered.report.cronbach_note = e.what();
    }
    filtered.report.cronbach_alpha_before = filtered.report.cronbach_alpha;
    try {
      filtered.report.krippendorff_alpha = krippendorff_alpha(matrix);
    } catch (const Error&) {
      filtered.report.krippendorff_alpha = std::nan("");
    }
    filtered.report.krippendorff_alpha_before = filtered.report.krippendorff_alpha;
  }
  write_text(p.reliability(), json::parse(to_json(filtered.report)).dump(2) + "\n");

  const std::set<RaterId> removed(filtered.report.removed_raters.begin(), filtered.report.removed_raters.end());
  std::vector<RatingRecord> kept;
  for (const auto& r : ingest.records) {
    if (!removed.contains(r.rater)) kept.push_back(r);
  }
  const auto summaries = aggregate_ratings(kept);
  {
    auto out = detail::open_output(p.rating_summary());
    write_summaries_csv(out, summaries);
  }
  // Distribution of rounded mean ratings.
  std::vector<std::size_t> histogram(kMaxRating, 0);
  for (const auto& sm : summaries) {
    const auto bin = std::clamp(static_cast<int>(std::lround(sm.mean_rating)), kMinRating, kMaxRating);
    ++histogram[static_cast<std::size_t>(bin - 1)];
  }
  auto j = summary_header(Stage::kReliability);
  j["input_fingerprint"] = file_fingerprint(s.ratings());
  j["records"] = ingest.records.size();
  j["malformed_skipped"] = ingest.malformed_skipped;
  j["raters"] = matrix.n_raters();
  j["items"] = summaries.size();
  j["cronbach_alpha_before"] = number_or_null(filtered.report.cronbach_alpha_before);
  j["krippendorff_alpha_before"] = number_or_null(filtered.report.krippendorff_alpha_before);
  j["cronbach_alpha"] = number_or_null(filtered.report.cronbach_alpha);
  j["krippendorff_alpha"] = number_or_null(filtered.report.krippendorff_alpha);
  j["removed_raters"] = filtered.report.removed_raters;
  if (!filter_note.empty()) j["note"] = filter_note;
  j["mean_rating_histogram"] = histogram;
  return j;
}

ordered_json run_features(const PipelineConfig& c, const StudyPaths& s, const PipelinePaths& p) {
  require(s.items(), "features", "`simulate` or provide items.txt and audio/");
  const auto items = read_item_list(s.items());
  if (items.empty()) throw InsufficientDataError("features: items.txt lists no items");
  const FeatureConfig features;
  std::uint64_t hash = detail::fnv1a("");
  Eigen::Index min_frames = std::numeric_limits<Eigen::Index>::max(), max_frames = 0;
  for (const auto& id : items) {
    const auto decoded = decode_wav_file(s.audio(id));
    const auto audio = leading_clip(resample_to_44100(decoded.audio), c.study.excerpt_seconds);
    const auto mel = mel_spectrogram(audio, features, id);
    std::ostringstream bytes;
    write_mels(bytes, mel);
    const auto blob = bytes.str();
    write_text(p.mels(id), blob);
    hash = detail::fnv1a(id + '\n' + blob, hash);
    min_frames = std::min(min_frames, mel.frames());
    max_frames = std::max(max_frames, mel.frames());
  }
  auto j = summary_header(Stage::kFeatures);
  j["items"] = items.size();
  j["n_mels"] = features.n_mels;
  j["window"] = features.window;
  j["hop"] = features.hop;
  j["sample_rate"] = features.sample_rate;
  j["excerpt_seconds"] = c.study.excerpt_seconds;
  j["min_frames"] = min_frames;
  j["max_frames"] = max_frames;
  j["features_fingerprint"] = detail::hex64(hash);
  return j;
}

std::map<ItemId, std::string> read_split(const fs::path& path) {
  auto in = detail::open_input(path);
  std::map<ItemId, std::string> split;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw ValidationError(path.string() + ": expected item_id,split");
    split[cells[0]] = cells[1];
  }
  return split;
}

std::vector<ItemRatingSummary> read_rating_summary(const PipelinePaths& p, std::string_view stage) {
  require(p.rating_summary(), stage, "the reliability stage");
  return read_with(p.rating_summary(), &read_summaries_csv);
}

ordered_json run_train(const PipelineConfig& c, const StudyPaths&, const PipelinePaths& p) {
  const auto summaries = read_rating_summary(p, "train");
  require(p.summary(Stage::kFeatures), "train", "the features stage");
  std::vector<ItemId> ids;
  std::map<ItemId, double> target;
  for (const auto& sm : summaries) {
    if (!fs::exists(p.mels(sm.item_id))) continue;
    ids.push_back(sm.item_id);
    target[sm.item_id] = sm.mean_rating;
  }
  if (ids.size() < 2) throw InsufficientDataError("train: fewer than 2 rated items with features");

  // Seeded hold-out split over the sorted ids.
  std::vector<ItemId> order = ids;
  std::mt19937_64 rng(detail::derive_seed(c.seed, 1));
  detail::shuffle(order, rng);
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(c.test_fraction * static_cast<double>(ids.size()))), 1, ids.size() - 1);
  const std::set<ItemId> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  {
    auto out = detail::open_output(p.split());
    out << "item_id,split\n";
    for (const auto& id : ids) out << id << ',' << (test.contains(id) ? "test" : "train") << '\n';
  }

  std::vector<MelSpectrogram> mels;
  std::vector<double> targets;
  for (const auto& id : ids) {
    if (test.contains(id)) continue;
    mels.push_back(read_mels_file(p.mels(id)));
    targets.push_back(target.at(id));
  }
  std::vector<const MelSpectrogram*> mel_ptrs;
  std::vector<TrainingSample> dataset;
  for (std::size_t i = 0; i < mels.size(); ++i) {
    mel_ptrs.push_back(&mels[i]);
    dataset.push_back({&mels[i], targets[i]});
  }
  const double mean_target = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
  auto params = init_model<float>(c.arch, c.seed, mean_target);
  fit_input_normalization(params, std::span<const MelSpectrogram* const>(mel_ptrs));
  TrainConfig tc = c.train;
  tc.seed = detail::derive_seed(c.seed, 2);
  const auto result = train(std::move(params), std::span<const TrainingSample>(dataset), tc);
  save_checkpoint(p.model(), to_checkpoint(result.params));

  auto j = summary_header(Stage::kTrain);
  j["train_items"] = dataset.size();
  j["test_items"] = n_test;
  j["weights"] = result.params.weights.size();
  j["learning_rate"] = tc.learning_rate;
  j["batch_size"] = tc.batch_size;
  j["epochs"] = result.loss_trace.size();
  j["steps"] = result.steps;
  j["initial_target_mean"] = mean_target;
  j["final_loss"] = result.loss_trace.back();
  j["loss_trace"] = result.loss_trace;
  j["checkpoint_fingerprint"] = file_fingerprint(p.model());
  return j;
}

ordered_json run_evaluate(const PipelineConfig& c, const StudyPaths& s, const PipelinePaths& p) {
  require(p.model(), "evaluate", "the train stage");
  require(p.split(), "evaluate", "the train stage");
  const auto params = from_checkpoint<float>(load_checkpoint(p.model()));
  const auto split = read_split(p.split());
  const auto summaries = read_rating_summary(p, "evaluate");
  std::map<ItemId, double> mean_rating;
  for (const auto& sm : summaries) mean_rating[sm.item_id] = sm.mean_rating;
  std::map<ItemId, double> latent;
  if (fs::exists(s.latent())) latent = read_latent_csv(s.latent());

  std::vector<double> test_pred, test_rating, test_pred_l, test_latent, train_pred, train_rating;
  std::ostringstream predictions;
  predictions << "item_id,split,prediction,mean_rating,latent\n";
  for (const auto& [id, part] : split) {
    require(p.mels(id), "evaluate", "the features stage");
    const double pred = forward(params, read_mels_file(p.mels(id)));
    const double rating = mean_rating.at(id);
    const auto lat = latent.find(id);
    predictions << id << ',' << part << ',' << detail::format_double(pred) << ',' << detail::format_double(rating)
                << ',' << (lat != latent.end() ? detail::format_double(lat->second) : "") << '\n';
    if (part == "test") {
      test_pred.push_back(pred);
      test_rating.push_back(rating);
      if (lat != latent.end()) {
        test_pred_l.push_back(pred);
        test_latent.push_back(lat->second);
      }
    } else {
      train_pred.push_back(pred);
      train_rating.push_back(rating);
    }
  }
  write_text(p.predictions(), predictions.str());

  auto j = summary_header(Stage::kEvaluate);
  j["test_items"] = test_pred.size();
  j["pearson_r"] = number_or_null(try_pearson(test_pred, test_rating));
  j["pearson_r_latent"] = latent.empty() ? ordered_json(nullptr) : number_or_null(try_pearson(test_pred_l, test_latent));
  j["train_pearson_r"] = number_or_null(try_pearson(train_pred, train_rating));

  j["cv_accuracy"] = nullptr;
  if (fs::exists(s.labeled())) {
    const auto corpus = read_labeled_corpus(s.labeled());
    const AudioScorer cnn = [&](const AudioBuffer& audio) {
      return static_cast<double>(forward(params, mel_spectrogram(audio)));
    };
    const auto report = mode_experiment(corpus, cnn, c.mode_clip_seconds, c.folds, c.seed);
    write_text(p.mode_report(), json::parse(to_json(report)).dump(2) + "\n");
    write_text(p.figure5(), figure5_strip(report));
    const AudioScorer baseline = [](const AudioBuffer& audio) { return keyprofile_majorness(chroma(audio)); };
    const auto base = mode_experiment(corpus, baseline, c.mode_clip_seconds, c.folds, c.seed);
    j["mode_items"] = corpus.items.size();
    j["cv_accuracy"] = report.cv_accuracy;
    j["fold_accuracies"] = report.fold_accuracies;
    j["mode_pearson_r"] = number_or_null(report.pearson_r);
    j["mistakes"] = report.mistakes;
    j["baseline_cv_accuracy"] = base.cv_accuracy;
  }
  if (fs::exists(s.emotions())) {
    const auto table = read_with(s.emotions(), &read_emotion_table);
    const auto corr = emotion_correlation(summaries, table);
    ordered_json e;
    for (const auto& dim : table.dimensions) e[dim] = number_or_null(corr.pearson_r.at(dim));
    j["emotion_correlation"] = e;
    j["emotion_join_size"] = corr.join_size;
  }
  return j;
}

ordered_json run_one(const PipelineConfig& c, Stage stage) {
  const StudyPaths s{c.study.data_dir};
  const PipelinePaths p{s.pipeline_dir()};
  ordered_json summary;
  switch (stage) {
    case Stage::kRank: summary = run_rank(c, s, p); break;
    case Stage::kAnchors: summary = run_anchors(c, s, p); break;
    case Stage::kReliability: summary = run_reliability(c, s, p); break;
    case Stage::kFeatures: summary = run_features(c, s, p); break;
    case Stage::kTrain: summary = run_train(c, s, p); break;
    case Stage::kEvaluate: summary = run_evaluate(c, s, p); break;
    case Stage::kAll: throw ParameterError("run_one does not chain stages");
  }
  write_summary(p, stage, summary);
  return summary;
}

}  // namespace

ordered_json run_stage(const PipelineConfig& config, Stage stage) {
  config.study.validate();
  if (stage != Stage::kAll) return run_one(config, stage);
  auto j = summary_header(Stage::kAll);
  ordered_json stages;
  for (Stage s : {Stage::kRank, Stage::kAnchors, Stage::kReliability, Stage::kFeatures, Stage::kTrain,
                  Stage::kEvaluate}) {
    stages[std::string(to_string(s))] = run_one(config, s);
  }
  const auto& eval = stages["evaluate"];
  for (const char* key : {"pearson_r", "pearson_r_latent", "cv_accuracy", "baseline_cv_accuracy"}) {
    j[key] = eval.contains(key) ? eval[key] : ordered_json(nullptr);
  }
  j["cronbach_alpha"] = stages["reliability"]["cronbach_alpha"];
  j["krippendorff_alpha"] = stages["reliability"]["krippendorff_alpha"];
  j["stages"] = stages;
  write_summary(PipelinePaths{StudyPaths{config.study.data_dir}.pipeline_dir()}, Stage::kAll, j);
  return j;
}

ordered_json simulate_study(const PipelineConfig& c, const SimulationConfig& sim) {
  c.study.validate();
  const StudyPaths s{c.study.data_dir};
  if (fs::exists(s.journal())) {
    throw ConfigError(s.root.string() + " holds a live study journal; simulate into an empty directory");
  }
  if (sim.unreliable_raters >= c.study.ratings_per_item) {
    throw ConfigError("unreliable_raters must be smaller than ratings_per_item");
  }
  const auto items = gen_corpus(sim.n_items, detail::derive_seed(c.seed, 10), c.study.excerpt_seconds);
  std::vector<ItemId> ids;
  std::ostringstream latent;
  latent << "item_id,latent\n";
  for (const auto& item : items) {
    ids.push_back(item.item_id);
    latent << item.item_id << ',' << detail::format_double(item.latent) << '\n';
    write_wav_file(s.audio(item.item_id), item.audio());
  }
  write_item_list(s.items(), ids);
  write_text(s.latent(), latent.str());

  const auto pair_raters =
      make_raters("pair_rater_", sim.pair_raters, sim.pair_noise, sim.bias_sigma, detail::derive_seed(c.seed, 11));
  std::vector<ItemPair> pairs;
  for (const auto& [a, b] : schedule_pairs(items.size(), c.study)) pairs.emplace_back(a, b);
  const auto comparisons =
      sim_pairwise(items, pair_raters, pairs, detail::derive_seed(c.seed, 12), c.study.raters_per_pair);
  {
    auto out = detail::open_output(s.comparisons());
    for (const auto& r : comparisons) out << to_json_line(r) << '\n';
  }

  // Placements are made against the anchors the rank and anchors stages select.
  run_one(c, Stage::kRank);
  run_one(c, Stage::kAnchors);
  const auto anchors = read_with(s.anchors(), &read_anchors);
  const std::size_t reliable = c.study.ratings_per_item - sim.unreliable_raters;
  auto pool = make_raters("rater_", reliable, sim.placement_noise, sim.bias_sigma, detail::derive_seed(c.seed, 13));
  for (auto& r : make_raters("noisy_", sim.unreliable_raters, sim.unreliable_noise, 0.0, detail::derive_seed(c.seed, 14))) {
    pool.push_back(std::move(r));
  }
  const auto ratings =
      sim_placements(items, anchors, pool, c.study.ratings_per_item, detail::derive_seed(c.seed, 15));
  {
    auto out = detail::open_output(s.ratings());
    for (const auto& r : ratings) out << to_json_line(r) << '\n';
  }

  const auto labeled = gen_mode_corpus(sim.n_major, sim.n_minor, detail::derive_seed(c.seed, 16), c.mode_clip_seconds);
  LabeledCorpus corpus;
  for (const auto& item : labeled) {
    const auto path = s.labeled().parent_path() / (item.item_id + ".wav");
    write_wav_file(path, item.audio());
    corpus.items.push_back({item.item_id, path, item.latent >= 0.5 ? Mode::kMajor : Mode::kMinor});
  }
  write_labeled_corpus(s.labeled(), corpus);

  const auto emotions = simulate_emotions(items, detail::derive_seed(c.seed, 17));
  {
    auto out = detail::open_output(s.emotions());
    out << "item_id";
    for (const auto& d : emotions.dimensions) out << ',' << d;
    out << '\n';
    for (const auto& [id, row] : emotions.rows) {
      out << id;
      for (double v : row) out << ',' << detail::format_double(v);
      out << '\n';
    }
  }

  ordered_json j;
  j["format_version"] = kPipelineFormatVersion;
  j["stage"] = "simulate";
  j["items"] = items.size();
  j["pairs"] = pairs.size();
  j["comparisons"] = comparisons.size();
  j["pair_raters"] = pair_raters.size();
  j["placement_raters"] = pool.size();
  j["ratings"] = ratings.size();
  j["anchors"] = anchors.anchors;
  j["labeled_items"] = labeled.size();
  write_text(s.pipeline_dir() / "simulate.summary.json", j.dump(2) + "\n");
  return j;
}

}  // namespace majorness
