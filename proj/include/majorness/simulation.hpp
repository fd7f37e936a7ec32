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
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "majorness/audio.hpp"
#include "majorness/evaluation.hpp"
#include "majorness/placement.hpp"
#include "majorness/ranking.hpp"

namespace majorness {

struct SynthesisConfig {
  double clip_seconds = 15.0;
  double sample_rate = kCanonicalSampleRate;
  // Chord roots in semitones above the tonic; I-IV-V-I twice.
  std::vector<int> progression = {0, 5, 7, 0, 0, 5, 7, 0};
  // Roots are placed in the octave starting at this MIDI note (60 = C4).
  int base_midi = 60;
  double note_amplitude = 0.2;
  double fade_seconds = 0.01;
};

inline double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

// Sum of equal-amplitude sines with linear fade in/out.
AudioBuffer synthesize_tones(std::span<const double> frequencies, double seconds,
                             double sample_rate = kCanonicalSampleRate, double amplitude = 0.2,
                             double fade_seconds = 0.01);

// Root-position triad (root, third, fifth) on a MIDI root.
AudioBuffer synthesize_triad(int root_midi, bool major, double seconds,
                             double sample_rate = kCanonicalSampleRate, double amplitude = 0.2);

// A chord-progression excerpt with known latent majorness. Audio is rendered
// on demand from the stored recipe.
struct SyntheticItem {
  ItemId item_id;
  double latent = 0.0;
  int tonic = 0;
  // Quality of each chord in the progression; true = major triad.
  std::vector<bool> chord_major;
  SynthesisConfig synthesis;

  AudioBuffer audio() const;
  // Fraction of major chords actually rendered.
  double major_fraction() const;
};

// Draws the tonic and the chord qualities (each major with probability `latent`).
SyntheticItem make_item(ItemId id, double latent, std::uint64_t seed, const SynthesisConfig& synthesis = {});

// n items with latents uniform on [0, 1]; ids item_00, item_01, ... padded to
// the width of n - 1.
std::vector<SyntheticItem> gen_corpus(std::size_t n, std::uint64_t seed, double clip_seconds = 15.0);

// Mode-labeled corpus: majors with latent in [0.75, 1], minors in [0, 0.25],
// tonics cycling through all twelve keys.
std::vector<SyntheticItem> gen_mode_corpus(std::size_t n_major, std::size_t n_minor, std::uint64_t seed,
                                           double clip_seconds = 12.0);

struct RaterModel {
  RaterId rater_id;
  double noise_sigma = 0.0;
  double bias = 0.0;
};

// `count` raters named prefix_00.. with the given noise and biases drawn
// from N(0, bias_sigma^2).
std::vector<RaterModel> make_raters(const std::string& prefix, std::size_t count, double noise_sigma,
                                    double bias_sigma, std::uint64_t seed);

using ItemPair = std::pair<std::size_t, std::size_t>;

std::vector<ItemPair> all_pairs(std::size_t n);

// Each trial: the rater perceives latent + bias + N(0, noise^2) for both
// items and picks the larger ("equal" on an exact tie). raters_per_pair
// distinct raters judge each pair (0 = every rater); presentation side is
// randomized.
std::vector<ComparisonRecord> sim_pairwise(std::span<const SyntheticItem> items, std::span<const RaterModel> raters,
                                           std::span<const ItemPair> pairs, std::uint64_t seed,
                                           std::size_t raters_per_pair = 0);

// Each item is placed by ratings_per_item distinct raters walking the real
// PlacementSession from the most-major anchor; every step is a fresh trial
// perceiving both the item and the anchor. Anchors must be items of the
// corpus.
std::vector<RatingRecord> sim_placements(std::span<const SyntheticItem> items, const AnchorSet& anchors,
                                         std::span<const RaterModel> raters, std::size_t ratings_per_item,
                                         std::uint64_t seed);

// happiness tracks latent majorness closely, valence loosely.
EmotionTable simulate_emotions(std::span<const SyntheticItem> items, std::uint64_t seed);

}  // namespace majorness
