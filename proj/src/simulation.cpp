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

#include "majorness/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "majorness/errors.hpp"
#include "majorness/random.hpp"
#include "majorness/stats.hpp"

namespace majorness {

namespace {

constexpr Timestamp kSimulationEpoch = 1.7e9;

std::string numbered_id(const std::string& prefix, std::size_t index, std::size_t count) {
  int width = 2;
  for (std::size_t c = count > 0 ? count - 1 : 0; c >= 100; c /= 10) ++width;
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%0*zu", width, index);
  return prefix + buffer;
}

// Adds a chord of sines into out[begin, end) with a linear fade at both ends.
void add_tones(Eigen::VectorXf& out, Eigen::Index begin, Eigen::Index end, std::span<const double> frequencies,
               double sample_rate, double amplitude, double fade_seconds) {
  const Eigen::Index n = end - begin;
  const double fade = std::max(1.0, std::round(fade_seconds * sample_rate));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double envelope =
        std::min({1.0, static_cast<double>(i) / fade, static_cast<double>(n - 1 - i) / fade});
    double value = 0.0;
    for (double f : frequencies) value += std::sin(2.0 * std::numbers::pi * f * t);
    out(begin + i) += static_cast<float>(amplitude * envelope * value);
  }
}

std::vector<double> triad_frequencies(int root_midi, bool major) {
  return {midi_to_hz(root_midi), midi_to_hz(root_midi + (major ? 4 : 3)), midi_to_hz(root_midi + 7)};
}

}  // namespace

AudioBuffer synthesize_tones(std::span<const double> frequencies, double seconds, double sample_rate,
                             double amplitude, double fade_seconds) {
  if (!(seconds > 0.0) || !(sample_rate > 0.0)) throw ParameterError("synthesis needs positive duration and rate");
  AudioBuffer audio;
  audio.sample_rate = sample_rate;
  audio.samples = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(std::round(seconds * sample_rate)));
  add_tones(audio.samples, 0, audio.samples.size(), frequencies, sample_rate, amplitude, fade_seconds);
  return audio;
}

AudioBuffer synthesize_triad(int root_midi, bool major, double seconds, double sample_rate, double amplitude) {
  const auto frequencies = triad_frequencies(root_midi, major);
  return synthesize_tones(frequencies, seconds, sample_rate, amplitude);
}

AudioBuffer SyntheticItem::audio() const {
  const auto& s = synthesis;
  if (chord_major.size() != s.progression.size()) {
    throw ValidationError("item " + item_id + ": chord qualities do not match the progression");
  }
  AudioBuffer audio;
  audio.sample_rate = s.sample_rate;
  const auto n = static_cast<Eigen::Index>(std::round(s.clip_seconds * s.sample_rate));
  audio.samples = Eigen::VectorXf::Zero(n);
  const auto chords = static_cast<Eigen::Index>(s.progression.size());
  for (Eigen::Index k = 0; k < chords; ++k) {
    const Eigen::Index begin = k * n / chords;
    const Eigen::Index end = (k + 1) * n / chords;
    const int root = s.base_midi + (tonic + s.progression[static_cast<std::size_t>(k)]) % 12;
    const auto frequencies = triad_frequencies(root, chord_major[static_cast<std::size_t>(k)]);
    add_tones(audio.samples, begin, end, frequencies, s.sample_rate, s.note_amplitude, s.fade_seconds);
  }
  return audio;
}

double SyntheticItem::major_fraction() const {
  if (chord_major.empty()) return 0.0;
  return static_cast<double>(std::count(chord_major.begin(), chord_major.end(), true)) /
         static_cast<double>(chord_major.size());
}

namespace {

SyntheticItem make_item_with_tonic(ItemId id, double latent, int tonic, std::mt19937_64& rng,
                                   const SynthesisConfig& synthesis) {
  if (!(latent >= 0.0 && latent <= 1.0)) throw ParameterError("latent majorness must lie in [0, 1]");
  SyntheticItem item;
  item.item_id = std::move(id);
  item.latent = latent;
  item.tonic = tonic;
  item.synthesis = synthesis;
  item.chord_major.reserve(synthesis.progression.size());
  for (std::size_t k = 0; k < synthesis.progression.size(); ++k) {
    item.chord_major.push_back(detail::unit_uniform(rng) < latent);
  }
  return item;
}

}  // namespace

SyntheticItem make_item(ItemId id, double latent, std::uint64_t seed, const SynthesisConfig& synthesis) {
  std::mt19937_64 rng(seed);
  const int tonic = static_cast<int>(detail::uniform_index(rng, 12));
  return make_item_with_tonic(std::move(id), latent, tonic, rng, synthesis);
}

std::vector<SyntheticItem> gen_corpus(std::size_t n, std::uint64_t seed, double clip_seconds) {
  if (n == 0) throw ParameterError("gen_corpus needs n >= 1");
  SynthesisConfig synthesis;
  synthesis.clip_seconds = clip_seconds;
  std::mt19937_64 rng(seed);
  std::vector<SyntheticItem> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double latent = detail::unit_uniform(rng);
    items.push_back(make_item(numbered_id("item_", i, n), latent, detail::derive_seed(seed, i), synthesis));
  }
  return items;
}

std::vector<SyntheticItem> gen_mode_corpus(std::size_t n_major, std::size_t n_minor, std::uint64_t seed,
                                           double clip_seconds) {
  if (n_major + n_minor == 0) throw ParameterError("gen_mode_corpus needs at least one item");
  SynthesisConfig synthesis;
  synthesis.clip_seconds = clip_seconds;
  std::mt19937_64 rng(seed);
  std::vector<SyntheticItem> items;
  items.reserve(n_major + n_minor);
  for (std::size_t i = 0; i < n_major; ++i) {
    const double latent = 0.75 + 0.25 * detail::unit_uniform(rng);
    items.push_back(make_item_with_tonic(numbered_id("major_", i, n_major), latent, static_cast<int>(i % 12), rng,
                                         synthesis));
  }
  for (std::size_t i = 0; i < n_minor; ++i) {
    const double latent = 0.25 * detail::unit_uniform(rng);
    items.push_back(make_item_with_tonic(numbered_id("minor_", i, n_minor), latent, static_cast<int>(i % 12), rng,
                                         synthesis));
  }
  return items;
}

std::vector<RaterModel> make_raters(const std::string& prefix, std::size_t count, double noise_sigma,
                                    double bias_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !(bias_sigma >= 0.0)) throw ParameterError("rater noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<RaterModel> raters;
  raters.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double bias = bias_sigma * detail::standard_normal(rng);
    raters.push_back({numbered_id(prefix, i, count), noise_sigma, bias});
  }
  return raters;
}

std::vector<ItemPair> all_pairs(std::size_t n) {
  std::vector<ItemPair> pairs;
  pairs.reserve(n * (n > 0 ? n - 1 : 0) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

namespace {

// Draws `count` distinct indices from [0, pool) by partial Fisher-Yates.
std::vector<std::size_t> pick_distinct(std::size_t pool, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> indices(pool);
  for (std::size_t i = 0; i < pool; ++i) indices[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(indices[i], indices[i + detail::uniform_index(rng, pool - i)]);
  }
  indices.resize(count);
  return indices;
}

double perceive(double latent, const RaterModel& rater, std::mt19937_64& rng) {
  return latent + rater.bias + rater.noise_sigma * detail::standard_normal(rng);
}

void validate_raters(std::span<const RaterModel> raters) {
  if (raters.empty()) throw ParameterError("simulation needs at least one rater");
  for (const auto& r : raters) {
    if (!(r.noise_sigma >= 0.0)) throw ParameterError("rater " + r.rater_id + ": noise_sigma must be >= 0");
  }
}

}  // namespace

std::vector<ComparisonRecord> sim_pairwise(std::span<const SyntheticItem> items, std::span<const RaterModel> raters,
                                           std::span<const ItemPair> pairs, std::uint64_t seed,
                                           std::size_t raters_per_pair) {
  validate_raters(raters);
  const std::size_t per_pair =
      raters_per_pair == 0 ? raters.size() : raters_per_pair;
  if (per_pair > raters.size()) throw ParameterError("raters_per_pair exceeds the rater pool");
  std::mt19937_64 rng(seed);
  std::vector<ComparisonRecord> records;
  records.reserve(pairs.size() * per_pair);
  Timestamp ts = kSimulationEpoch;
  for (const auto& [a, b] : pairs) {
    if (a >= items.size() || b >= items.size() || a == b) throw ParameterError("pair references an invalid item");
    for (std::size_t r : pick_distinct(raters.size(), per_pair, rng)) {
      const auto& rater = raters[r];
      const bool swap = detail::unit_uniform(rng) < 0.5;
      const auto& left = items[swap ? b : a];
      const auto& right = items[swap ? a : b];
      const double p_left = perceive(left.latent, rater, rng);
      const double p_right = perceive(right.latent, rater, rng);
      const Choice choice = p_left > p_right   ? Choice::kLeftMoreMajor
                            : p_right > p_left ? Choice::kRightMoreMajor
                                               : Choice::kEqual;
      records.push_back({rater.rater_id, left.item_id, right.item_id, choice, ts});
      ts += 1.0;
    }
  }
  return records;
}

std::vector<RatingRecord> sim_placements(std::span<const SyntheticItem> items, const AnchorSet& anchors,
                                         std::span<const RaterModel> raters, std::size_t ratings_per_item,
                                         std::uint64_t seed) {
  validate_raters(raters);
  if (ratings_per_item > raters.size()) throw ParameterError("ratings_per_item exceeds the rater pool");
  std::map<ItemId, double> latent;
  for (const auto& item : items) latent[item.item_id] = item.latent;
  for (const auto& a : anchors.anchors) {
    if (!latent.contains(a)) throw ParameterError("anchor " + a + " is not an item of the corpus");
  }
  std::mt19937_64 rng(seed);
  std::vector<RatingRecord> records;
  records.reserve(items.size() * ratings_per_item);
  Timestamp ts = kSimulationEpoch;
  for (const auto& item : items) {
    for (std::size_t r : pick_distinct(raters.size(), ratings_per_item, rng)) {
      const auto& rater = raters[r];
      auto session = start_placement(item.item_id, anchors);
      while (session.state() == SessionState::kActive) {
        const double value = perceive(item.latent, rater, rng);
        const double anchor_value = perceive(latent.at(session.current_anchor()), rater, rng);
        session.step(value > anchor_value ? Judgment::kItemLessMinor : Judgment::kItemMoreMinor);
      }
      RatingRecord record;
      record.rater = rater.rater_id;
      record.item = item.item_id;
      record.slot = *session.slot();
      record.rating = rating_from_placement(record.slot, anchors.anchors.size());
      record.walk = session.judgments();
      record.timestamp = ts;
      record.self_comparison = session.self_comparison();
      records.push_back(std::move(record));
      ts += 1.0;
    }
  }
  return records;
}

EmotionTable simulate_emotions(std::span<const SyntheticItem> items, std::uint64_t seed) {
  EmotionTable table;
  table.dimensions = {"valence", "happiness", "arousal"};
  if (items.empty()) return table;
  std::vector<double> latents;
  latents.reserve(items.size());
  for (const auto& item : items) latents.push_back(item.latent);
  const double spread =
      items.size() > 1 ? std::sqrt(sample_variance(Eigen::Map<const Eigen::VectorXd>(latents.data(),
                                                                                     static_cast<Eigen::Index>(latents.size()))))
                       : 0.0;
  std::mt19937_64 rng(seed);
  for (const auto& item : items) {
    const double valence = item.latent + 1.0 * spread * detail::standard_normal(rng);
    const double happiness = item.latent + 0.5 * spread * detail::standard_normal(rng);
    const double arousal = 0.5 + 0.2 * detail::standard_normal(rng);
    table.rows[item.item_id] = {valence, happiness, arousal};
  }
  return table;
}

}  // namespace majorness
