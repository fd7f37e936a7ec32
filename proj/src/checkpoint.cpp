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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "json.hpp"

#include "majorness/model.hpp"

namespace majorness {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_floats(std::string& out, const std::vector<float>& values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::size_t n) {
    std::vector<float> out(n);
    for (auto& f : out) f = std::bit_cast<float>(u32());
    return out;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw UnsupportedFormatError("truncated MJRN checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::string& bytes, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n)));
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  nlohmann::ordered_json config;
  config["n_mels"] = c.arch.n_mels;
  config["time_pool"] = c.arch.time_pool;
  config["kernel_widths"] = c.arch.kernel_widths;
  config["channels"] = c.arch.channels;
  config["seed"] = c.seed;
  const std::string block = config.dump();

  std::string bytes = "MJRN";
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, static_cast<std::uint32_t>(block.size()));
  bytes += block;
  put_u32(bytes, static_cast<std::uint32_t>(c.weights.size()));
  put_u32(bytes, static_cast<std::uint32_t>(c.input_mean.size()));
  put_floats(bytes, c.weights);
  put_floats(bytes, c.input_mean);
  put_floats(bytes, c.input_scale);
  put_u32(bytes, crc(bytes, bytes.size()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 4 || bytes.compare(0, 4, "MJRN") != 0) throw UnsupportedFormatError("not an MJRN checkpoint");
  if (bytes.size() < 8) throw UnsupportedFormatError("truncated MJRN checkpoint");
  {
    Cursor tail(bytes);
    tail.take(bytes.size() - 4);
    if (tail.u32() != crc(bytes, bytes.size() - 4)) throw UnsupportedFormatError("MJRN checkpoint checksum mismatch");
  }
  Cursor cur(bytes);
  cur.take(4);
  const auto version = cur.u32();
  if (version != kCheckpointVersion) {
    throw UnsupportedFormatError("unsupported MJRN version " + std::to_string(version));
  }
  const auto block = cur.take(cur.u32());
  Checkpoint c;
  try {
    const auto config = nlohmann::json::parse(block);
    c.arch.n_mels = config.at("n_mels").get<Eigen::Index>();
    c.arch.time_pool = config.at("time_pool").get<Eigen::Index>();
    c.arch.kernel_widths = config.at("kernel_widths").get<std::vector<Eigen::Index>>();
    c.arch.channels = config.at("channels").get<Eigen::Index>();
    c.seed = config.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UnsupportedFormatError(std::string("bad MJRN config block: ") + e.what());
  }
  const auto n_weights = cur.u32();
  const auto n_bands = cur.u32();
  c.weights = cur.floats(n_weights);
  c.input_mean = cur.floats(n_bands);
  c.input_scale = cur.floats(n_bands);
  if (cur.position() != bytes.size() - 4) throw UnsupportedFormatError("MJRN checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace majorness
