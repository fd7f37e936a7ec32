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

#include "majorness/keyprofile.hpp"

#include "majorness/errors.hpp"
#include "majorness/stats.hpp"

namespace majorness {

KeyProfileModel KeyProfileModel::krumhansl_kessler() {
  KeyProfileModel m;
  m.major_profile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
  m.minor_profile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};
  return m;
}

void KeyProfileModel::validate() const {
  for (std::size_t i = 0; i < 12; ++i) {
    if (!(major_profile[i] > 0.0) || !(minor_profile[i] > 0.0)) {
      throw ConfigError("key profiles must be strictly positive");
    }
  }
}

std::array<double, 12> rotate_profile(const std::array<double, 12>& profile, int tonic) {
  std::array<double, 12> out{};
  for (int pc = 0; pc < 12; ++pc) out[static_cast<std::size_t>(pc)] = profile[static_cast<std::size_t>(((pc - tonic) % 12 + 12) % 12)];
  return out;
}

namespace {

std::pair<double, int> best_rotation(const Eigen::Map<const Eigen::Matrix<double, 12, 1>>& chroma,
                                     const std::array<double, 12>& profile) {
  double best = -2.0;
  int best_tonic = 0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    const auto rotated = rotate_profile(profile, tonic);
    const double r = pearson(chroma, Eigen::Map<const Eigen::Matrix<double, 12, 1>>(rotated.data()));
    if (r > best) {
      best = r;
      best_tonic = tonic;
    }
  }
  return {best, best_tonic};
}

}  // namespace

KeyEstimate estimate_key(const ChromaVector& chroma, const KeyProfileModel& model) {
  if (chroma.silent) throw UndefinedStatisticError("key estimate undefined for a silent chroma vector");
  model.validate();
  const Eigen::Map<const Eigen::Matrix<double, 12, 1>> c(chroma.energies.data());
  KeyEstimate est;
  std::tie(est.r_major, est.major_tonic) = best_rotation(c, model.major_profile);
  std::tie(est.r_minor, est.minor_tonic) = best_rotation(c, model.minor_profile);
  est.score = logistic(model.gain * (est.r_major - est.r_minor));
  return est;
}

double keyprofile_majorness(const ChromaVector& chroma, const KeyProfileModel& model) {
  return estimate_key(chroma, model).score;
}

}  // namespace majorness
