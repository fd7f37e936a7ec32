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
#include <span>
#include <vector>

#include "majorness/types.hpp"

namespace majorness {

inline constexpr double kCanonicalSampleRate = 44100.0;

// Mono samples in [-1, 1].
struct AudioBuffer {
  Eigen::VectorXf samples;
  double sample_rate = kCanonicalSampleRate;

  Eigen::Index size() const { return samples.size(); }
  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class SampleFormat { kPcm16, kFloat32 };

struct WavInfo {
  SampleFormat format = SampleFormat::kPcm16;
  int channels = 1;
  int bits_per_sample = 16;
  double sample_rate = kCanonicalSampleRate;
  std::size_t frames = 0;
};

struct DecodedWav {
  AudioBuffer audio;
  WavInfo info;
};

// RIFF/WAVE with PCM16 or IEEE float32 samples, 1-2 channels (stereo is
// averaged). Anything else raises UnsupportedFormatError.
DecodedWav decode_wav(std::span<const std::uint8_t> bytes);
DecodedWav decode_wav_file(const std::filesystem::path& path);

// Mono PCM16, samples clipped to [-1, 1].
std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio);
void write_wav_file(const std::filesystem::path& path, const AudioBuffer& audio);

// Linear-interpolation resampling; identity when already at 44.1 kHz.
AudioBuffer resample_to_44100(const AudioBuffer& audio);

// First `seconds` of the buffer (or all of it if shorter).
AudioBuffer leading_clip(const AudioBuffer& audio, double seconds);

}  // namespace majorness
