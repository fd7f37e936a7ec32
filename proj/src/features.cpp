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

#include "majorness/features.hpp"

#include <algorithm>
#include <bit>
#include <complex>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "majorness/errors.hpp"

namespace majorness {

namespace {

constexpr double kChromaLowHz = 55.0;
constexpr double kChromaHighHz = 4186.0;
// Peaks more than 60 dB below the loudest bin of their frame are ignored.
constexpr double kPeakRelativeFloor = 1e-6;

// Integral from -inf to x of the unit-area triangle on [lo, hi] peaking at mid.
double triangle_cdf(double x, double lo, double mid, double hi) {
  const double h = 2.0 / (hi - lo);
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  if (x <= mid) return h * (x - lo) * (x - lo) / (2.0 * (mid - lo));
  return h * (mid - lo) / 2.0 + h * ((hi - mid) * (hi - mid) - (hi - x) * (hi - x)) / (2.0 * (hi - mid));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw UnsupportedFormatError("truncated MELS header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void FeatureConfig::validate() const {
  if (window < 2) throw ConfigError("window must be at least 2 samples");
  if (hop != window / 2) throw ConfigError("hop must be window/2 (half overlap)");
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
  if (fmin < 0.0 || fmin >= upper_frequency() || upper_frequency() > sample_rate / 2.0) {
    throw ConfigError("need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (log_floor <= 0.0) throw ConfigError("log_floor must be positive");
}

MatrixXd power_spectrogram(const AudioBuffer& audio, const FeatureConfig& config) {
  config.validate();
  const Eigen::Index frames = frame_count(audio.samples.size(), config);
  const Eigen::Index bins = config.n_bins();
  const VectorXd window = hann_window<double>(config.window);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(config.window));
  std::vector<std::complex<double>> spectrum;

  MatrixXd power(frames, bins);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index start = f * config.hop;
    for (Eigen::Index i = 0; i < config.window; ++i) {
      frame[static_cast<std::size_t>(i)] = static_cast<double>(audio.samples(start + i)) * window(i);
    }
    fft.fwd(spectrum, frame);
    for (Eigen::Index k = 0; k < bins; ++k) power(f, k) = std::norm(spectrum[static_cast<std::size_t>(k)]);
  }
  return power;
}

MelFilterbank::MelFilterbank(const FeatureConfig& config) {
  config.validate();
  const Eigen::Index m = config.n_mels;
  const Eigen::Index bins = config.n_bins();
  const double mel_lo = hz_to_mel(config.fmin);
  const double mel_hi = hz_to_mel(config.upper_frequency());
  VectorXd edges(m + 2);
  for (Eigen::Index i = 0; i < m + 2; ++i) {
    edges(i) = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(m + 1));
  }
  centers_ = edges.segment(1, m);

  const double bin_hz = config.sample_rate / static_cast<double>(config.window);
  weights_ = MatrixXd::Zero(m, bins);
  for (Eigen::Index b = 0; b < m; ++b) {
    const double lo = edges(b), mid = edges(b + 1), hi = edges(b + 2);
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f + bin_hz / 2 <= lo || f - bin_hz / 2 >= hi) continue;
      weights_(b, k) = triangle_cdf(f + bin_hz / 2, lo, mid, hi) - triangle_cdf(f - bin_hz / 2, lo, mid, hi);
    }
  }
}

Eigen::Index MelFilterbank::nearest_band(double hz) const {
  Eigen::Index best = 0;
  (centers_.array() - hz).abs().minCoeff(&best);
  return best;
}

MelSpectrogram mel_spectrogram(const AudioBuffer& audio, const FeatureConfig& config,
                               const ItemId& item_id) {
  config.validate();
  if (audio.sample_rate != config.sample_rate) {
    throw ParameterError("mel_spectrogram expects " + std::to_string(config.sample_rate) +
                         " Hz audio, got " + std::to_string(audio.sample_rate) + " Hz; resample first");
  }
  if (audio.samples.size() < config.window) {
    throw ShapeError("audio too short for a mel spectrogram: " + std::to_string(audio.samples.size()) +
                     " samples, minimum is " + std::to_string(config.window));
  }
  const MelFilterbank bank(config);
  const MatrixXd power = power_spectrogram(audio, config);
  const MatrixXd energies = power * bank.weights().transpose();
  MelSpectrogram out;
  out.config = config;
  out.item_id = item_id;
  out.values = energies.array().max(config.log_floor).log().cast<float>();
  return out;
}

void write_mels(std::ostream& out, const MelSpectrogram& mel) {
  out.write("MELS", 4);
  put_u32(out, static_cast<std::uint32_t>(mel.frames()));
  put_u32(out, static_cast<std::uint32_t>(mel.n_mels()));
  std::vector<char> buf(static_cast<std::size_t>(mel.values.size()) * 4);
  for (Eigen::Index i = 0; i < mel.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(mel.values.data()[i]);
    for (int b = 0; b < 4; ++b) buf[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

MelSpectrogram read_mels(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MELS", 4) != 0) {
    throw UnsupportedFormatError("not a MELS spectrogram file");
  }
  const auto frames = get_u32(in);
  const auto n_mels = get_u32(in);
  MelSpectrogram mel;
  mel.config.n_mels = n_mels;
  mel.values.resize(frames, n_mels);
  std::vector<unsigned char> buf(static_cast<std::size_t>(frames) * n_mels * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw UnsupportedFormatError("truncated MELS payload");
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(frames) * n_mels; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    mel.values.data()[i] = std::bit_cast<float>(bits);
  }
  return mel;
}

void write_mels_file(const std::filesystem::path& path, const MelSpectrogram& mel) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_mels(out, mel);
}

MelSpectrogram read_mels_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto mel = read_mels(in);
  mel.item_id = path.stem().string();
  return mel;
}

int pitch_class_of(double hz) {
  const long semis = std::lround(12.0 * std::log2(hz / 440.0)) + 9;
  return static_cast<int>(((semis % 12) + 12) % 12);
}

ChromaVector chroma(const AudioBuffer& audio, const FeatureConfig& config) {
  if (audio.samples.size() < config.window) {
    throw ShapeError("audio too short for chroma: " + std::to_string(audio.samples.size()) +
                     " samples, minimum is " + std::to_string(config.window));
  }
  const MatrixXd power = power_spectrogram(audio, config);
  const double bin_hz = audio.sample_rate / static_cast<double>(config.window);
  const auto lo_bin = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(kChromaLowHz / bin_hz)));
  const auto hi_bin = std::min<Eigen::Index>(power.cols() - 2,
                                             static_cast<Eigen::Index>(std::ceil(kChromaHighHz / bin_hz)));

  ChromaVector out;
  for (Eigen::Index f = 0; f < power.rows(); ++f) {
    const auto row = power.row(f);
    const double threshold = std::max(config.log_floor, kPeakRelativeFloor * row.maxCoeff());
    for (Eigen::Index k = lo_bin; k <= hi_bin; ++k) {
      const double p = row(k);
      if (p <= threshold || p <= row(k - 1) || p < row(k + 1)) continue;
      // Parabolic interpolation of the log-power peak.
      const double a = std::log(std::max(row(k - 1), config.log_floor));
      const double b = std::log(p);
      const double c = std::log(std::max(row(k + 1), config.log_floor));
      const double denom = a - 2.0 * b + c;
      const double offset = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
      const double hz = (static_cast<double>(k) + offset) * bin_hz;
      if (hz < kChromaLowHz || hz > kChromaHighHz) continue;
      out.energies[static_cast<std::size_t>(pitch_class_of(hz))] += p;
    }
  }
  double total = 0.0;
  for (double e : out.energies) total += e;
  if (total <= 0.0) {
    out.energies.fill(0.0);
    out.silent = true;
    return out;
  }
  for (double& e : out.energies) e /= total;
  return out;
}

}  // namespace majorness
