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

#include <array>

#include "majorness/features.hpp"

namespace majorness {

struct KeyProfileModel {
  // Tone profiles indexed from the tonic (0 = tonic, 7 = fifth, ...).
  std::array<double, 12> major_profile{};
  std::array<double, 12> minor_profile{};
  // Slope of the logistic map from (r_major - r_minor) to [0, 1].
  double gain = 5.0;

  // Krumhansl & Kessler (1982) probe-tone ratings, as tabulated in
  // Krumhansl, "Cognitive Foundations of Musical Pitch" (1990), table 2.1.
  static KeyProfileModel krumhansl_kessler();

  // Throws ConfigError unless every profile entry is strictly positive.
  void validate() const;
};

struct KeyEstimate {
  // Best correlation over the 12 transpositions of each profile.
  double r_major = 0.0;
  double r_minor = 0.0;
  int major_tonic = 0;
  int minor_tonic = 0;
  double score = 0.5;
};

// Rotates the profile so that its tonic lands on pitch class `tonic`.
std::array<double, 12> rotate_profile(const std::array<double, 12>& profile, int tonic);

KeyEstimate estimate_key(const ChromaVector& chroma, const KeyProfileModel& model = KeyProfileModel::krumhansl_kessler());

// sigmoid(gain * (r_major - r_minor)); throws UndefinedStatisticError on a
// silent chroma vector.
double keyprofile_majorness(const ChromaVector& chroma,
                            const KeyProfileModel& model = KeyProfileModel::krumhansl_kessler());

}  // namespace majorness
