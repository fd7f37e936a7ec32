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

#include "majorness/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "majorness/errors.hpp"

namespace majorness {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) throw UnsupportedFormatError(std::string("truncated WAV: ") + what);
  }
  std::uint16_t u16() {
    require(2, "field");
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    require(4, "field");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::string tag() {
    require(4, "chunk tag");
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  const std::uint8_t* data() const { return bytes_.data() + pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

DecodedWav decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < 12) throw UnsupportedFormatError("not a RIFF/WAVE stream: truncated header");
  if (in.tag() != "RIFF") throw UnsupportedFormatError("not a RIFF stream");
  in.u32();
  if (in.tag() != "WAVE") throw UnsupportedFormatError("RIFF stream is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  while (in.remaining() >= 8) {
    const auto id = in.tag();
    const std::uint32_t size = in.u32();
    const std::size_t body = in.position();
    in.require(size, "chunk body");
    if (id == "fmt ") {
      if (size < 16) throw UnsupportedFormatError("truncated WAV: fmt chunk");
      format = in.u16();
      channels = in.u16();
      rate = in.u32();
      in.u32();  // byte rate
      in.u16();  // block align
      bits = in.u16();
      if (format == kFormatExtensible) {
        if (size < 40) throw UnsupportedFormatError("truncated WAVE_FORMAT_EXTENSIBLE header");
        in.u16();  // cbSize
        in.u16();  // valid bits
        in.u32();  // channel mask
        format = in.u16();  // leading bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data = in.data();
      data_size = size;
    }
    const std::size_t next = body + size + (size & 1u);
    if (next > bytes.size() || (have_fmt && data)) break;
    in.seek(next);
  }
  if (!have_fmt) throw UnsupportedFormatError("WAV has no fmt chunk");
  if (!data) throw UnsupportedFormatError("WAV has no data chunk");

  WavInfo info;
  info.channels = channels;
  info.bits_per_sample = bits;
  info.sample_rate = rate;
  if (format == kFormatPcm && bits == 16) {
    info.format = SampleFormat::kPcm16;
  } else if (format == kFormatFloat && bits == 32) {
    info.format = SampleFormat::kFloat32;
  } else {
    throw UnsupportedFormatError("unsupported WAV codec (format tag " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bits); need PCM16 or float32");
  }
  if (channels < 1 || channels > 2) {
    throw UnsupportedFormatError("unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw UnsupportedFormatError("WAV sample rate is zero");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  info.frames = frames;

  DecodedWav out;
  out.info = info;
  out.audio.sample_rate = rate;
  out.audio.samples.resize(static_cast<Eigen::Index>(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    float acc = 0.0f;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (f * channels + c) * bytes_per_sample;
      if (info.format == SampleFormat::kPcm16) {
        const auto s = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
        acc += static_cast<float>(s) / 32768.0f;
      } else {
        const std::uint32_t bitsv = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                    (static_cast<std::uint32_t>(p[2]) << 16) |
                                    (static_cast<std::uint32_t>(p[3]) << 24);
        acc += std::bit_cast<float>(bitsv);
      }
    }
    out.audio.samples(static_cast<Eigen::Index>(f)) = acc / static_cast<float>(channels);
  }
  if (!out.audio.samples.allFinite()) throw UnsupportedFormatError("WAV contains non-finite samples");
  return out;
}

DecodedWav decode_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const UnsupportedFormatError& e) {
    throw UnsupportedFormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio) {
  const auto frames = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(frames));
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * frames);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * frames);
  for (Eigen::Index i = 0; i < audio.samples.size(); ++i) {
    const float x = std::clamp(audio.samples(i), -1.0f, 1.0f);
    const auto s = static_cast<std::int16_t>(std::lround(std::clamp(x * 32768.0f, -32768.0f, 32767.0f)));
    put_u16(out, static_cast<std::uint16_t>(s));
  }
  return out;
}

void write_wav_file(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_wav_pcm16(audio);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer resample_to_44100(const AudioBuffer& audio) {
  if (audio.sample_rate <= 0.0) throw ParameterError("sample rate must be positive");
  if (audio.sample_rate == kCanonicalSampleRate || audio.samples.size() == 0) {
    return {audio.samples, audio.samples.size() == 0 ? kCanonicalSampleRate : audio.sample_rate};
  }
  const double ratio = audio.sample_rate / kCanonicalSampleRate;
  const auto n_in = audio.samples.size();
  const auto n_out = static_cast<Eigen::Index>(std::llround(static_cast<double>(n_in) / ratio));
  AudioBuffer out;
  out.sample_rate = kCanonicalSampleRate;
  out.samples.resize(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto j = static_cast<Eigen::Index>(pos);
    const double frac = pos - static_cast<double>(j);
    const float a = audio.samples(std::min(j, n_in - 1));
    const float b = audio.samples(std::min(j + 1, n_in - 1));
    out.samples(i) = static_cast<float>(a + frac * (b - a));
  }
  return out;
}

AudioBuffer leading_clip(const AudioBuffer& audio, double seconds) {
  const auto n = std::min<Eigen::Index>(
      audio.samples.size(), static_cast<Eigen::Index>(std::llround(seconds * audio.sample_rate)));
  return {audio.samples.head(n), audio.sample_rate};
}

}  // namespace majorness
