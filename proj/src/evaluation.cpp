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

#include "majorness/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "majorness/errors.hpp"
#include "majorness/model.hpp"
#include "text_util.hpp"

namespace majorness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_ll_standardized(double a, double b, const VectorXd& xs, const VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const double z = a + b * xs(i);
    // log p = -log(1 + e^-z), log(1 - p) = -log(1 + e^z)
    const double log_p = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    const double log_q = z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
    ll += y(i) * log_p + (1.0 - y(i)) * log_q;
  }
  return ll / static_cast<double>(xs.size());
}

}  // namespace

double logistic_log_likelihood(const LogisticModel& model, std::span<const double> x, std::span<const int> labels) {
  if (x.size() != labels.size() || x.empty()) throw ParameterError("logistic: feature/label size mismatch");
  VectorXd xs(static_cast<Eigen::Index>(x.size())), y(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    xs(static_cast<Eigen::Index>(i)) = x[i];
    y(static_cast<Eigen::Index>(i)) = labels[i];
  }
  return mean_ll_standardized(model.intercept, model.slope, xs, y);
}

LogisticModel fit_logistic(std::span<const double> x, std::span<const int> labels, const LogisticFitConfig& config) {
  if (x.size() != labels.size() || x.empty()) throw ParameterError("logistic: feature/label size mismatch");
  const auto n = static_cast<Eigen::Index>(x.size());
  VectorXd xv(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xv(i) = x[static_cast<std::size_t>(i)];
    const int l = labels[static_cast<std::size_t>(i)];
    if (l != 0 && l != 1) throw ParameterError("logistic labels must be 0 or 1");
    y(i) = l;
  }
  const double positives = y.sum();
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    // One class only: the likelihood has no finite maximizer; predict it.
    return {positives == 0.0 ? -30.0 : 30.0, 0.0};
  }
  const double mu = xv.mean();
  const double sigma = std::sqrt((xv.array() - mu).square().mean());
  if (sigma == 0.0) {
    const double rate = positives / static_cast<double>(n);
    return {std::log(rate / (1.0 - rate)), 0.0};
  }
  const VectorXd xs = (xv.array() - mu) / sigma;

  double a = 0.0, b = 0.0, step = 1.0;
  double ll = mean_ll_standardized(a, b, xs, y);
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    double ga = 0.0, gb = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y(i) - logistic(a + b * xs(i));
      ga += r;
      gb += r * xs(i);
    }
    ga /= static_cast<double>(n);
    gb /= static_cast<double>(n);
    if (std::max(std::abs(ga), std::abs(gb)) < config.tol) break;
    step = std::min(step * 2.0, 1e6);
    bool improved = false;
    while (step > 1e-14) {
      const double next = mean_ll_standardized(a + step * ga, b + step * gb, xs, y);
      if (next > ll) {
        const double gain = next - ll;
        a += step * ga;
        b += step * gb;
        ll = next;
        improved = gain > 1e-15 * std::max(1.0, std::abs(ll));
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {a - b * mu / sigma, b / sigma};
}

EvalReport logistic_cv(std::span<const double> feature, std::span<const int> labels, std::size_t folds,
                       std::uint64_t seed, std::span<const ItemId> ids) {
  const std::size_t n = feature.size();
  if (labels.size() != n) throw ParameterError("logistic_cv: feature/label size mismatch");
  if (!ids.empty() && ids.size() != n) throw ParameterError("logistic_cv: id count mismatch");
  if (folds < 2) throw ParameterError("logistic_cv needs at least 2 folds");
  if (n < folds) {
    throw InsufficientDataError("logistic_cv: " + std::to_string(n) + " samples for " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      pos.push_back(i);
    } else if (labels[i] == 0) {
      neg.push_back(i);
    } else {
      throw ParameterError("logistic_cv labels must be 0 or 1");
    }
  }
  if (pos.empty() || neg.empty()) throw ParameterError("logistic_cv needs both classes present");

  // Stratified assignment: shuffle within class, then deal round-robin.
  std::mt19937_64 rng(seed);
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(i));
      std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
  };
  shuffle(pos);
  shuffle(neg);
  std::vector<std::size_t> fold_of(n);
  std::size_t dealt = 0;
  for (auto i : pos) fold_of[i] = dealt++ % folds;
  for (auto i : neg) fold_of[i] = dealt++ % folds;

  EvalReport report;
  report.per_item.resize(n);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<double> train_x;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) {
        train_x.push_back(feature[i]);
        train_y.push_back(labels[i]);
      }
    }
    const auto model = fit_logistic(train_x, train_y);
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) continue;
      auto& p = report.per_item[i];
      p.item_id = ids.empty() ? std::to_string(i) : ids[i];
      p.feature = feature[i];
      p.label = labels[i];
      p.prediction = model.probability(feature[i]);
      p.predicted_label = model.predict(feature[i]);
      p.fold = f;
      ++total;
      if (p.predicted_label == labels[i]) ++correct;
    }
    report.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(total));
  }
  report.cv_accuracy = std::accumulate(report.fold_accuracies.begin(), report.fold_accuracies.end(), 0.0) /
                       static_cast<double>(folds);
  for (const auto& p : report.per_item) {
    if (p.predicted_label != *p.label) report.mistakes.push_back(p.item_id);
  }
  std::vector<double> y(labels.begin(), labels.end());
  try {
    report.pearson_r = pearson(std::vector<double>(feature.begin(), feature.end()), y);
  } catch (const Error&) {
    report.pearson_r = kNaN;
  }
  return report;
}

LabeledCorpus read_labeled_corpus(const std::filesystem::path& csv_path) {
  auto in = detail::open_input(csv_path);
  const auto base = csv_path.parent_path();
  LabeledCorpus corpus;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "item_id") continue;
    }
    if (f.size() != 3) throw ValidationError("labeled corpus row needs item_id,path,label: " + line);
    LabeledItem item;
    item.item_id = f[0];
    item.audio_path = std::filesystem::path(f[1]).is_absolute() ? std::filesystem::path(f[1]) : base / f[1];
    if (f[2] == "major") {
      item.label = Mode::kMajor;
    } else if (f[2] == "minor") {
      item.label = Mode::kMinor;
    } else {
      throw ValidationError("label must be major or minor, got '" + f[2] + "'");
    }
    if (!std::filesystem::exists(item.audio_path)) {
      throw IoError("labeled corpus audio not found: " + item.audio_path.string());
    }
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

void write_labeled_corpus(const std::filesystem::path& csv_path, const LabeledCorpus& corpus) {
  auto out = detail::open_output(csv_path);
  const auto base = csv_path.parent_path();
  out << "item_id,path,label\n";
  for (const auto& item : corpus.items) {
    const auto rel = item.audio_path.lexically_relative(base);
    out << item.item_id << ',' << (rel.empty() ? item.audio_path : rel).generic_string() << ','
        << (item.label == Mode::kMajor ? "major" : "minor") << '\n';
  }
}

EvalReport mode_experiment(const LabeledCorpus& corpus, const AudioScorer& scorer, double clip_seconds,
                           std::size_t folds, std::uint64_t seed) {
  if (corpus.items.empty()) throw InsufficientDataError("mode experiment on an empty corpus");
  if (!(clip_seconds > 0.0)) throw ParameterError("clip_seconds must be positive");
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<ItemId> ids;
  for (const auto& item : corpus.items) {
    double score = 0.0;
    try {
      const auto clip = leading_clip(resample_to_44100(decode_wav_file(item.audio_path).audio), clip_seconds);
      score = scorer(clip);
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.find(item.audio_path.string()) != std::string::npos) throw;
      throw Error(item.audio_path.string() + ": " + what);
    }
    scores.push_back(score);
    labels.push_back(static_cast<int>(item.label));
    ids.push_back(item.item_id);
  }
  auto report = logistic_cv(scores, labels, folds, seed, ids);
  std::stable_sort(report.per_item.begin(), report.per_item.end(),
                   [](const auto& a, const auto& b) { return a.feature < b.feature; });
  return report;
}

std::string figure5_strip(const EvalReport& report) {
  std::vector<ItemPrediction> items = report.per_item;
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.feature < b.feature; });
  std::ostringstream out;
  std::string strip, marks;
  for (const auto& p : items) {
    const bool major = p.label.value_or(p.predicted_label) == 1;
    strip += major ? 'M' : 'm';
    marks += (p.label && *p.label != p.predicted_label) ? '^' : ' ';
  }
  out << "predicted majorness, low -> high (M = major, m = minor, ^ = misclassified)\n";
  out << strip << '\n' << marks << '\n' << '\n';
  out << "item_id,score,label,p_major,predicted,mistake\n";
  for (const auto& p : items) {
    out << p.item_id << ',' << detail::format_double(p.feature) << ','
        << (p.label ? (*p.label == 1 ? "major" : "minor") : "") << ',' << detail::format_double(p.prediction) << ','
        << (p.predicted_label == 1 ? "major" : "minor") << ','
        << ((p.label && *p.label != p.predicted_label) ? "yes" : "no") << '\n';
  }
  return out.str();
}

std::string to_json(const EvalReport& report) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json() : nlohmann::ordered_json(v); };
  nlohmann::ordered_json j;
  j["pearson_r"] = num(report.pearson_r);
  j["cv_accuracy"] = report.cv_accuracy;
  j["fold_accuracies"] = report.fold_accuracies;
  auto items = nlohmann::ordered_json::array();
  for (const auto& p : report.per_item) {
    nlohmann::ordered_json it;
    it["item_id"] = p.item_id;
    it["feature"] = p.feature;
    if (p.label) it["label"] = *p.label == 1 ? "major" : "minor";
    it["prediction"] = p.prediction;
    it["predicted"] = p.predicted_label == 1 ? "major" : "minor";
    it["fold"] = p.fold;
    items.push_back(std::move(it));
  }
  j["per_item"] = std::move(items);
  j["mistakes"] = report.mistakes;
  return j.dump(2);
}

EmotionTable read_emotion_table(std::istream& in) {
  EmotionTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (header) {
      if (f.size() < 2) throw ValidationError("emotion table needs item_id and at least one dimension");
      table.dimensions.assign(f.begin() + 1, f.end());
      header = false;
      continue;
    }
    if (f.size() != table.dimensions.size() + 1) throw ValidationError("emotion table row has wrong field count: " + line);
    std::vector<double> values;
    for (std::size_t c = 1; c < f.size(); ++c) values.push_back(detail::parse_double_or_throw(f[c], table.dimensions[c - 1]));
    table.rows[f[0]] = std::move(values);
  }
  return table;
}

EmotionCorrelation emotion_correlation(const std::vector<ItemRatingSummary>& summaries, const EmotionTable& emotions) {
  std::vector<double> ratings;
  std::vector<const std::vector<double>*> rows;
  for (const auto& s : summaries) {
    const auto it = emotions.rows.find(s.item_id);
    if (it == emotions.rows.end()) continue;
    ratings.push_back(s.mean_rating);
    rows.push_back(&it->second);
  }
  if (ratings.size() < 3) {
    throw InsufficientDataError("emotion correlation needs >= 3 items in both tables, joined " +
                                std::to_string(ratings.size()));
  }
  EmotionCorrelation out;
  out.join_size = ratings.size();
  for (std::size_t d = 0; d < emotions.dimensions.size(); ++d) {
    std::vector<double> dim;
    for (const auto* row : rows) dim.push_back((*row)[d]);
    try {
      out.pearson_r[emotions.dimensions[d]] = pearson(ratings, dim);
    } catch (const UndefinedStatisticError&) {
      out.pearson_r[emotions.dimensions[d]] = kNaN;
    }
  }
  return out;
}

}  // namespace majorness
