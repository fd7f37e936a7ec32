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

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"
#include "majorness/evaluation.hpp"
#include "majorness/features.hpp"
#include "majorness/keyprofile.hpp"
#include "majorness/model.hpp"
#include "majorness/pipeline.hpp"
#include "majorness/ranking.hpp"
#include "majorness/reliability.hpp"
#include "majorness/server.hpp"
#include "majorness/simulation.hpp"
#include "majorness/stats.hpp"
#include "majorness/study.hpp"
#include "oracles.hpp"
// Last: <resolv.h> defines a _res macro that collides with Eigen parameter names.
#include "httplib.h"

using namespace majorness;
using namespace test_oracles;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("majorness_accept_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

VectorXd theta_vector(const Ranking& r) {
  VectorXd t(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) t(static_cast<Eigen::Index>(i)) = r.entries[i].theta;
  return t;
}

VectorXd latent_vector(const Ranking& r, const std::vector<SyntheticItem>& items) {
  std::map<ItemId, double> latent;
  for (const auto& it : items) latent[it.item_id] = it.latent;
  VectorXd l(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) l(static_cast<Eigen::Index>(i)) = latent.at(r.entries[i].item_id);
  return l;
}

double theta_of(const Ranking& r, const ItemId& id) {
  for (const auto& e : r.entries) {
    if (e.item_id == id) return e.theta;
  }
  throw std::runtime_error("missing item " + id);
}

Outcome bradley_terry_oracle() {
  std::vector<ComparisonRecord> events;
  double ts = 0;
  auto win = [&](const char* w, const char* l, int n) {
    for (int i = 0; i < n; ++i) events.push_back({"r", w, l, Choice::kLeftMoreMajor, ts++});
  };
  win("A", "B", 3);
  win("B", "A", 1);
  win("B", "C", 2);
  win("C", "B", 1);
  win("A", "C", 2);
  win("C", "A", 1);
  const std::vector<std::tuple<int, int, double>> wins = {{0, 1, 3}, {1, 0, 1}, {1, 2, 2}, {2, 1, 1}, {0, 2, 2}, {2, 0, 1}};
  const auto set = ingest_comparisons(events).set;

  BradleyTerryConfig pure;
  pure.regularization = 0.0;
  const auto fit = fit_bradley_terry(set, pure);
  const auto oracle = grid_search_mle(wins);
  auto reg_wins = wins;
  for (auto& w : reg_wins) std::get<2>(w) += 0.5;
  const auto reg_fit = fit_bradley_terry(set);
  const auto reg_oracle = grid_search_mle(reg_wins);

  double worst = 0.0;
  const char* ids[3] = {"A", "B", "C"};
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(theta_of(fit, ids[i]) - oracle[static_cast<std::size_t>(i)]));
    worst = std::max(worst, std::abs(theta_of(reg_fit, ids[i]) - reg_oracle[static_cast<std::size_t>(i)]));
  }
  return {worst < 1e-2, "max |theta - grid MLE| = " + fmt(worst, 3)};
}

Outcome ranking_recovery() {
  const auto items = gen_corpus(100, 2024);
  const auto pairs = all_pairs(items.size());
  const auto noisy = make_raters("r", 80, 0.1, 0.0, 7);
  const auto fit = fit_bradley_terry(ingest_comparisons(sim_pairwise(items, noisy, pairs, 8, 5)).set);
  const double rho = spearman(theta_vector(fit), latent_vector(fit, items));
  const auto exact = make_raters("e", 5, 0.0, 0.0, 9);
  const auto fit0 = fit_bradley_terry(ingest_comparisons(sim_pairwise(items, exact, pairs, 10, 5)).set);
  const double tau = kendall_tau(theta_vector(fit0), latent_vector(fit0, items));
  return {rho >= 0.95 && tau == 1.0, "Spearman(sigma=0.1) = " + fmt(rho) + ", Kendall(noiseless) = " + fmt(tau)};
}

Outcome reliability_oracles() {
  const auto example = published_example();
  const double k_err = std::abs(krippendorff_alpha(example) - krippendorff_oracle(example, false));
  const std::vector<std::vector<double>> rows = {{2, 3, 3}, {4, 5, 4}, {6, 6, 7}, {9, 8, 8}};
  const double c_err = std::abs(*cronbach_alpha(matrix_of(rows)) - cronbach_oracle(rows));
  const auto same = matrix_of({{1, 1, 1}, {3, 3, 3}, {4, 4, 4}, {8, 8, 8}, {10, 10, 10}});
  const double same_c = *cronbach_alpha(same), same_k = krippendorff_alpha(same);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> d(1, 10);
  std::vector<std::vector<double>> random_rows(1000, std::vector<double>(5));
  for (auto& r : random_rows) {
    for (auto& v : r) v = d(rng);
  }
  const auto random = matrix_of(random_rows);
  const double rand_c = *cronbach_alpha(random), rand_k = krippendorff_alpha(random);
  const bool pass = k_err < 1e-9 && c_err < 1e-12 && std::abs(same_c - 1.0) < 1e-12 && std::abs(same_k - 1.0) < 1e-12 &&
                    std::abs(rand_c) < 0.1 && std::abs(rand_k) < 0.1;
  return {pass, "|dK| = " + fmt(k_err, 2) + ", |dC| = " + fmt(c_err, 2) + ", random alphas " + fmt(rand_c, 3) + " / " +
                    fmt(rand_k, 3)};
}

Outcome rater_filtering() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 60; ++i) {
    const double truth = 1.0 + 9.0 * std::uniform_real_distribution<double>()(rng);
    std::vector<double> row;
    for (int r = 0; r < 8; ++r) row.push_back(std::clamp(truth + noise(rng), 1.0, 10.0));
    for (int r = 0; r < 2; ++r) row.push_back(std::clamp(11.0 - truth + noise(rng), 1.0, 10.0));
    rows.push_back(row);
  }
  const auto result = filter_raters(matrix_of(rows));
  const std::set<RaterId> removed(result.report.removed_raters.begin(), result.report.removed_raters.end());
  const double before = result.report.cronbach_alpha_before.value_or(NAN);
  const double after = result.report.cronbach_alpha.value_or(NAN);
  const bool pass = removed == std::set<RaterId>{"r8", "r9"} && after >= before;
  std::string who;
  for (const auto& r : result.report.removed_raters) who += (who.empty() ? "" : ",") + r;
  return {pass, "removed {" + who + "}, Cronbach " + fmt(before, 3) + " -> " + fmt(after, 3)};
}

Outcome dsp() {
  const auto mel = mel_spectrogram(sine(440.0, 12.0));
  const auto band = expected_band(440.0, 299);
  Eigen::Index wrong_frames = 0;
  for (Eigen::Index t = 0; t < mel.frames(); ++t) {
    Eigen::Index arg = 0;
    mel.values.row(t).maxCoeff(&arg);
    wrong_frames += arg != band;
  }
  int triads_ok = 0;
  for (int pc = 0; pc < 12; ++pc) {
    for (bool major : {true, false}) {
      const std::set<int> want = {pc, (pc + (major ? 4 : 3)) % 12, (pc + 7) % 12};
      triads_ok += top3(chroma(synthesize_triad(60 + pc, major, 1.0))) == want;
    }
  }
  return {mel.frames() == 515 && wrong_frames == 0 && triads_ok == 24,
          std::to_string(mel.frames()) + " frames, " + std::to_string(wrong_frames) + " frames off band " +
              std::to_string(band) + ", " + std::to_string(triads_ok) + "/24 triads"};
}

Outcome baseline_separation() {
  int ok = 0;
  for (int pc = 0; pc < 12; ++pc) {
    ok += keyprofile_majorness(chroma(synthesize_triad(60 + pc, true, 1.0))) > 0.5;
    ok += keyprofile_majorness(chroma(synthesize_triad(60 + pc, false, 1.0))) < 0.5;
  }
  return {ok == 24, std::to_string(ok) + "/24 triads on the correct side of 0.5"};
}

MelSpectrogram random_mel(Eigen::Index frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(-5.0f, 2.0f);
  MelSpectrogram m;
  m.values.resize(frames, 299);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = dist(rng);
  return m;
}

Outcome model_verification() {
  const ArchConfig arch;
  // Float32 weights, differentiated in double.
  const auto params = init_model<float>(arch, 3, 5.0);
  const auto check = grad_check(params.cast<double>(), random_mel(80, 1), 7.5, 1e-4, 256, 2);

  std::vector<MelSpectrogram> mels;
  for (int i = 0; i < 8; ++i) mels.push_back(random_mel(64, 10 + static_cast<std::uint64_t>(i)));
  std::vector<TrainingSample> data;
  std::vector<const MelSpectrogram*> ptrs;
  for (int i = 0; i < 8; ++i) {
    data.push_back({&mels[static_cast<std::size_t>(i)], 1.0 + 9.0 * i / 7.0});
    ptrs.push_back(&mels[static_cast<std::size_t>(i)]);
  }
  auto start = init_model<float>(arch, 4, 5.5);
  fit_input_normalization(start, std::span<const MelSpectrogram* const>(ptrs));
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 8;
  cfg.epochs = 500;
  cfg.max_steps = 500;
  const auto trained = train(start, data, cfg);
  const double final_mse = trained.loss_trace.back();

  bool lengths_ok = true;
  try {
    lengths_ok = std::isfinite(forward(params, random_mel(50, 20))) && std::isfinite(forward(params, random_mel(500, 21)));
  } catch (const Error&) {
    lengths_ok = false;
  }
  const bool deterministic = init_model<float>(arch, 77) == init_model<float>(arch, 77) &&
                             !(init_model<float>(arch, 77) == init_model<float>(arch, 78));
  const bool pass = check.max_relative_error < 1e-3 && check.checked >= 100 && final_mse < 1e-2 &&
                    trained.steps <= 500 && lengths_ok && deterministic;
  return {pass, "grad rel err " + fmt(check.max_relative_error, 2) + " over " + std::to_string(check.checked) +
                    " weights, overfit MSE " + fmt(final_mse, 2) + " after " + std::to_string(trained.steps) +
                    " steps, 50/500 frames " + (lengths_ok ? "ok" : "rejected") + ", init " +
                    (deterministic ? "deterministic" : "not deterministic")};
}

Outcome mode_experiment_analog() {
  TempDir tmp("mode");
  LabeledCorpus corpus;
  for (const auto& item : gen_mode_corpus(48, 48, 31)) {
    const auto path = tmp.path / (item.item_id + ".wav");
    write_wav_file(path, item.audio());
    corpus.items.push_back({item.item_id, path, item.latent >= 0.5 ? Mode::kMajor : Mode::kMinor});
  }
  const AudioScorer scorer = [](const AudioBuffer& a) { return keyprofile_majorness(chroma(a)); };
  const auto report = mode_experiment(corpus, scorer, 12.0, 10, 1);

  // Random baseline: the same scores against shuffled labels.
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : report.per_item) {
    scores.push_back(p.feature);
    labels.push_back(*p.label);
  }
  std::mt19937_64 rng(123);
  double shuffled = 0.0;
  constexpr int kPermutations = 200;
  for (int k = 0; k < kPermutations; ++k) {
    std::shuffle(labels.begin(), labels.end(), rng);
    shuffled += logistic_cv(scores, labels, 10, static_cast<std::uint64_t>(k)).cv_accuracy / kPermutations;
  }
  const bool pass = report.cv_accuracy >= 0.70 && std::abs(shuffled - 0.5) <= 0.05;
  return {pass, "10-fold accuracy " + fmt(report.cv_accuracy, 3) + ", shuffled-label baseline " + fmt(shuffled, 3) +
                    " (mean of " + std::to_string(kPermutations) + " permutations)"};
}

Outcome end_to_end() {
  TempDir tmp("e2e");
  PipelineConfig config;
  config.study.data_dir = tmp.path;
  simulate_study(config, SimulationConfig{});
  const auto summary = run_stage(config, Stage::kAll);
  const auto& r = summary.at("pearson_r_latent");
  const double value = r.is_number() ? r.get<double>() : NAN;
  std::string extra;
  for (const char* key : {"pearson_r", "cv_accuracy"}) {
    if (summary.contains(key) && summary.at(key).is_number()) extra += std::string(", ") + key + " " + fmt(summary.at(key).get<double>(), 3);
  }
  return {value >= 0.48, "held-out r(pred, latent) = " + fmt(value, 3) + extra};
}

Outcome service_contract() {
  TempDir tmp("svc");
  std::vector<ItemId> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("item_" + std::to_string(i));
  write_item_list(tmp.path / "items.txt", ids);
  StudyConfig cfg;
  cfg.data_dir = tmp.path;

  StudyStatus live_status;
  std::vector<std::size_t> live_coverage;
  std::atomic<int> http_errors{0};
  {
    Study study(cfg);
    StudyServer server(study, {"127.0.0.1", 0, std::nullopt});
    const int port = server.bind();
    std::thread runner([&] { server.run(); });
    server.wait_until_ready();

    std::vector<std::thread> raters;
    for (int r = 0; r < 50; ++r) {
      raters.emplace_back([&, r] {
        httplib::Client cli("127.0.0.1", port);
        cli.set_read_timeout(30, 0);
        std::mt19937_64 rng(static_cast<std::uint64_t>(r));
        const std::string rater = "rater_" + std::to_string(r);
        for (;;) {
          auto res = cli.Get("/api/task?rater=" + rater + "&kind=pair");
          if (!res || res->status != 200) {
            ++http_errors;
            return;
          }
          const auto task = nlohmann::json::parse(res->body);
          if (task.at("status") != "assigned") return;
          const char* choices[] = {"left_more_major", "right_more_major", "equal"};
          const nlohmann::json body = {{"task_id", task.at("task_id")}, {"choice", choices[rng() % 3]}};
          // Some raters double-submit, as a double click would.
          const int sends = rng() % 4 == 0 ? 2 : 1;
          for (int s = 0; s < sends; ++s) {
            auto ack = cli.Post("/api/annotation", body.dump(), "application/json");
            if (!ack || (ack->status != 201 && ack->status != 200)) ++http_errors;
          }
        }
      });
    }
    for (auto& t : raters) t.join();
    live_status = study.status();
    live_coverage = study.pair_coverage();
    server.stop();
    runner.join();
  }

  std::map<std::pair<ItemId, ItemId>, std::size_t> per_pair;
  std::set<std::tuple<RaterId, ItemId, ItemId>> seen;
  std::size_t duplicates = 0, lines = 0;
  std::ifstream in(tmp.path / "comparisons.jsonl");
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++lines;
    const auto j = nlohmann::json::parse(line);
    const auto left = j.at("left").get<std::string>(), right = j.at("right").get<std::string>();
    const auto& [a, b] = std::minmax(left, right);
    ++per_pair[{a, b}];
    duplicates += !seen.insert({j.at("rater").get<std::string>(), a, b}).second;
  }
  bool all_five = per_pair.size() == 190;
  for (const auto& [pair, n] : per_pair) all_five = all_five && n == 5;

  Study replayed(cfg);
  const bool replay_ok = to_json(replayed.status()) == to_json(live_status) && replayed.pair_coverage() == live_coverage;
  const bool pass = all_five && duplicates == 0 && lines == 950 && replay_ok && http_errors == 0;
  return {pass, std::to_string(per_pair.size()) + " pairs, " + std::to_string(lines) + " records, " +
                    std::to_string(duplicates) + " duplicates, replay " + (replay_ok ? "matches" : "differs") + ", " +
                    std::to_string(http_errors.load()) + " HTTP errors"};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Bradley-Terry oracle equivalence", bradley_terry_oracle},
      {2, "ranking recovery", ranking_recovery},
      {3, "reliability oracles", reliability_oracles},
      {4, "rater filtering", rater_filtering},
      {5, "DSP front end", dsp},
      {6, "baseline separation", baseline_separation},
      {7, "model verification", model_verification},
      {8, "mode experiment analog", mode_experiment_analog},
      {9, "end-to-end pipeline", end_to_end},
      {10, "service contract", service_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s criterion %d: %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
