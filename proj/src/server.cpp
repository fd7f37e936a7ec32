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

#include "majorness/server.hpp"

#include <algorithm>
#include <cctype>

#include "httplib.h"
#include "json.hpp"
#include "majorness/errors.hpp"
#include "text_util.hpp"

namespace majorness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  ordered_json body;
  body["error"] = message;
  send_json(res, status, body);
}

// Item ids name files under audio/; reject anything that could leave it.
bool safe_item_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const TaskRejectedError& e) {
    send_error(res, 409, e.what());
  } catch (const StateError& e) {
    send_error(res, 409, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

struct StudyServer::Impl {
  Study& study;
  ServerOptions options;
  httplib::Server server;

  Impl(Study& s, ServerOptions o) : study(s), options(std::move(o)) { install(); }

  void install() {
    server.Get("/api/task", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto rater = req.get_param_value("rater");
        if (rater.empty()) throw ValidationError("missing rater parameter");
        const auto kind = task_kind_from_string(req.has_param("kind") ? req.get_param_value("kind") : "pair");
        const auto task = study.next_task(rater, kind);
        if (!task) {
          ordered_json body;
          body["status"] = "exhausted";
          body["rater"] = rater;
          body["kind"] = to_string(kind);
          send_json(res, 200, body);
          return;
        }
        auto body = to_json(*task);
        body["status"] = "assigned";
        send_json(res, 200, body);
      });
    });

    server.Post("/api/annotation", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto submission = submission_from_json(json::parse(req.body));
        const auto ack = study.submit(submission);
        send_json(res, ack.duplicate ? 200 : 201, to_json(ack));
      });
    });

    server.Get(R"(/api/audio/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        if (!safe_item_id(id) || !study.has_item(id)) {
          send_error(res, 404, "unknown item " + id);
          return;
        }
        const auto path = study.paths().audio(id);
        if (!std::filesystem::exists(path)) {
          send_error(res, 404, "no audio for item " + id);
          return;
        }
        // httplib answers Range requests from the full body.
        res.set_content(detail::read_file(path), "audio/wav");
      });
    });

    server.Get("/api/study/status", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, to_json(study.status())); });
    });

    if (options.ui_dir && std::filesystem::is_directory(*options.ui_dir)) {
      server.set_mount_point("/", options.ui_dir->string());
    }
  }
};

StudyServer::StudyServer(Study& study, ServerOptions options)
    : impl_(std::make_unique<Impl>(study, std::move(options))) {}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind() {
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->options.host);
    if (port < 0) throw IoError("cannot bind " + impl_->options.host);
  } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
    throw IoError("cannot bind " + impl_->options.host + ":" + std::to_string(port));
  }
  return port;
}

void StudyServer::run() { impl_->server.listen_after_bind(); }

void StudyServer::stop() {
  if (impl_) impl_->server.stop();
}

void StudyServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace majorness
