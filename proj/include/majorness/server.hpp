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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "majorness/study.hpp"

namespace majorness {

struct ServerOptions {
  std::string host = "127.0.0.1";
  // 0 binds any free port.
  int port = 8080;
  // Static files served under "/" when set.
  std::optional<std::filesystem::path> ui_dir;
};

// HTTP front end for a Study:
//   GET  /api/task?rater=R&kind=pair|placement
//   POST /api/annotation
//   GET  /api/audio/{item_id}   (WAV, honours Range)
//   GET  /api/study/status
class StudyServer {
 public:
  StudyServer(Study& study, ServerOptions options);
  ~StudyServer();
  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  // Binds the socket and returns the port; throws IoError on failure.
  int bind();
  // Serves until stop(); call bind() first.
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace majorness
