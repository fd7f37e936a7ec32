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

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "majorness/audio.hpp"
#include "majorness/errors.hpp"

using namespace majorness;

namespace {

// Hand-assembled RIFF/WAVE container.
struct WavBuilder {
  std::vector<std::uint8_t> bytes;

  void raw(const char* s) { bytes.insert(bytes.end(), s, s + 4); }
  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }

  static std::vector<std::uint8_t> make(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                        std::uint16_t bits, const std::vector<std::uint8_t>& data,
                                        bool extra_chunk = false) {
    WavBuilder w;
    w.raw("RIFF");
    w.u32(0);
    w.raw("WAVE");
    if (extra_chunk) {
      w.raw("LIST");
      w.u32(3);
      w.bytes.insert(w.bytes.end(), {'a', 'b', 'c', 0});  // odd size plus pad byte
    }
    w.raw("fmt ");
    w.u32(16);
    w.u16(format);
    w.u16(channels);
    w.u32(rate);
    w.u32(rate * channels * bits / 8);
    w.u16(static_cast<std::uint16_t>(channels * bits / 8));
    w.u16(bits);
    w.raw("data");
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.bytes.insert(w.bytes.end(), data.begin(), data.end());
    const auto riff = static_cast<std::uint32_t>(w.bytes.size() - 8);
    std::memcpy(w.bytes.data() + 4, &riff, 4);
    return w.bytes;
  }
};

std::vector<std::uint8_t> pcm16(const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> out;
  for (auto s : samples) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return out;
}

}  // namespace

TEST_SUITE("audio") {
  TEST_CASE("decode PCM16 mono") {
    const auto bytes = WavBuilder::make(1, 1, 22050, 16, pcm16({0, 16384, -32768, 32767}));
    const auto d = decode_wav(bytes);
    CHECK(d.info.format == SampleFormat::kPcm16);
    CHECK(d.info.channels == 1);
    CHECK(d.info.sample_rate == 22050.0);
    CHECK(d.info.frames == 4);
    REQUIRE(d.audio.size() == 4);
    CHECK(d.audio.samples(1) == doctest::Approx(0.5));
    CHECK(d.audio.samples(2) == doctest::Approx(-1.0));
    CHECK(d.audio.sample_rate == 22050.0);
  }

  TEST_CASE("decode stereo averages channels and skips unknown chunks") {
    const auto bytes = WavBuilder::make(1, 2, 44100, 16, pcm16({16384, 0, -16384, -16384}), true);
    const auto d = decode_wav(bytes);
    CHECK(d.info.channels == 2);
    REQUIRE(d.audio.size() == 2);
    CHECK(d.audio.samples(0) == doctest::Approx(0.25));
    CHECK(d.audio.samples(1) == doctest::Approx(-0.5));
  }

  TEST_CASE("decode float32") {
    std::vector<std::uint8_t> data(8);
    const float a = 0.25f, b = -0.75f;
    std::memcpy(data.data(), &a, 4);
    std::memcpy(data.data() + 4, &b, 4);
    const auto d = decode_wav(WavBuilder::make(3, 1, 48000, 32, data));
    CHECK(d.info.format == SampleFormat::kFloat32);
    CHECK(d.audio.samples(0) == 0.25f);
    CHECK(d.audio.samples(1) == -0.75f);
  }

  TEST_CASE("unsupported inputs") {
    const std::vector<std::uint8_t> junk = {'O', 'g', 'g', 'S', 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(decode_wav(junk), UnsupportedFormatError);
    CHECK_THROWS_AS(decode_wav(WavBuilder::make(2, 1, 44100, 4, {0, 0, 0, 0})), UnsupportedFormatError);
    CHECK_THROWS_AS(decode_wav(WavBuilder::make(1, 3, 44100, 16, pcm16({0, 0, 0}))), UnsupportedFormatError);
    CHECK_THROWS_AS(decode_wav(WavBuilder::make(1, 1, 44100, 24, {0, 0, 0})), UnsupportedFormatError);
    auto truncated = WavBuilder::make(1, 1, 44100, 16, pcm16({1, 2, 3, 4}));
    truncated.resize(truncated.size() - 5);
    CHECK_THROWS_AS(decode_wav(truncated), UnsupportedFormatError);
  }

  TEST_CASE("decode_wav_file names the file") {
    try {
      decode_wav_file("/nonexistent/x.wav");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("/nonexistent/x.wav") != std::string::npos);
    }
  }

  TEST_CASE("PCM16 encode round trip") {
    AudioBuffer a;
    a.samples = Eigen::VectorXf::LinSpaced(1000, -1.0f, 1.0f);
    a.sample_rate = 16000;
    const auto d = decode_wav(encode_wav_pcm16(a));
    CHECK(d.audio.sample_rate == 16000);
    REQUIRE(d.audio.size() == 1000);
    CHECK((d.audio.samples - a.samples).cwiseAbs().maxCoeff() < 1.0f / 32767.0f);
  }

  TEST_CASE("resample and clip") {
    AudioBuffer a;
    a.sample_rate = 22050;
    a.samples.resize(22050);
    for (int i = 0; i < 22050; ++i) a.samples(i) = static_cast<float>(std::sin(2 * std::numbers::pi * 100 * i / 22050.0));
    const auto r = resample_to_44100(a);
    CHECK(r.sample_rate == 44100);
    CHECK(std::abs(r.size() - 44100) <= 1);
    for (int i = 0; i < 1000; ++i) {
      CHECK(r.samples(i) == doctest::Approx(std::sin(2 * std::numbers::pi * 100 * i / 44100.0)).epsilon(1e-3));
    }
    CHECK(leading_clip(r, 0.5).size() == 22050);
    CHECK(leading_clip(r, 5.0).size() == r.size());
  }
}
