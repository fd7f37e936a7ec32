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
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>

#include "majorness/audio.hpp"
#include "majorness/types.hpp"

namespace majorness {

struct FeatureConfig {
  Eigen::Index window = 2048;
  Eigen::Index hop = 1024;
  Eigen::Index n_mels = 299;
  double fmin = 0.0;
  // Unset means Nyquist of the input.
  std::optional<double> fmax;
  double log_floor = 1e-10;
  double sample_rate = kCanonicalSampleRate;

  double upper_frequency() const { return fmax.value_or(sample_rate / 2.0); }
  Eigen::Index n_bins() const { return window / 2 + 1; }
  // Throws ConfigError unless hop = window/2, n_mels >= 1, 0 <= fmin < fmax <= Nyquist.
  void validate() const;
};

// HTK mel scale.
template <typename Scalar>
Scalar hz_to_mel(Scalar hz) {
  return Scalar(2595) * std::log10(Scalar(1) + hz / Scalar(700));
}

template <typename Scalar>
Scalar mel_to_hz(Scalar mel) {
  return Scalar(700) * (std::pow(Scalar(10), mel / Scalar(2595)) - Scalar(1));
}

// Periodic Hann window, w[n] = sin^2(pi n / N).
template <typename Scalar>
Vector<Scalar> hann_window(Eigen::Index n) {
  Vector<Scalar> w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar s = std::sin(std::numbers::pi_v<Scalar> * Scalar(i) / Scalar(n));
    w(i) = s * s;
  }
  return w;
}

// floor((L - window) / hop) + 1 for L >= window, else 0.
inline Eigen::Index frame_count(Eigen::Index length, const FeatureConfig& config) {
  return length < config.window ? 0 : (length - config.window) / config.hop + 1;
}

// Squared-magnitude STFT, frames x (window/2 + 1), no padding.
MatrixXd power_spectrogram(const AudioBuffer& audio, const FeatureConfig& config);

// Triangular filters equally spaced on the HTK mel scale. Each FFT bin's
// weight is the integral of the unit-area triangle over the bin's frequency
// extent, so every filter sums to one and narrow low-frequency filters never
// come out empty.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FeatureConfig& config);

  // n_mels x n_bins.
  const MatrixXd& weights() const { return weights_; }
  // Peak frequency of each triangle, Hz.
  const VectorXd& center_frequencies() const { return centers_; }
  // Index of the band whose center is nearest `hz`.
  Eigen::Index nearest_band(double hz) const;

 private:
  MatrixXd weights_;
  VectorXd centers_;
};

struct MelSpectrogram {
  // frames x n_mels natural-log energies, floored at log(log_floor).
  RowMatrix<float> values;
  FeatureConfig config;
  ItemId item_id;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index n_mels() const { return values.cols(); }
};

// Requires 44.1 kHz input of at least `window` samples.
MelSpectrogram mel_spectrogram(const AudioBuffer& audio, const FeatureConfig& config = {},
                               const ItemId& item_id = {});

// "MELS", u32 frames, u32 n_mels, row-major little-endian float32.
void write_mels(std::ostream& out, const MelSpectrogram& mel);
MelSpectrogram read_mels(std::istream& in);
void write_mels_file(const std::filesystem::path& path, const MelSpectrogram& mel);
MelSpectrogram read_mels_file(const std::filesystem::path& path);

inline constexpr std::array<const char*, 12> kPitchClassNames = {
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

struct ChromaVector {
  // Pitch classes C..B, unit sum unless silent.
  std::array<double, 12> energies{};
  bool silent = false;
};

// 0 = C ... 11 = B, via round(12 log2(f / 440)) + 9 mod 12.
int pitch_class_of(double hz);

// Spectral peaks in 55-4186 Hz, folded to pitch classes and summed over all
// frames. Silence yields the all-zero vector with the flag set.
ChromaVector chroma(const AudioBuffer& audio, const FeatureConfig& config = {});

}  // namespace majorness
