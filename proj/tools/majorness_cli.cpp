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

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "majorness/errors.hpp"
#include "majorness/pipeline.hpp"
#include "majorness/server.hpp"
#include "majorness/study.hpp"

namespace {

majorness::StudyServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw majorness::ConfigError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw majorness::ConfigError("config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Majorness annotation study and modeling pipeline"};
  app.require_subcommand(1);

  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::string config_path;
  app.add_option("--data-dir", data_dir, "Study directory (default: data)");
  app.add_option("--seed", seed, "Seed for scheduling, simulation and training");
  app.add_option("--config", config_path, "JSON file with study and pipeline settings")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks a free port)");
  serve->add_option("--ui-dir", ui_dir, "Static UI directory served at /");

  auto* simulate = app.add_subcommand("simulate", "Write a simulated study into the data directory");
  std::optional<std::size_t> sim_items;
  simulate->add_option("--items", sim_items, "Number of synthetic excerpts");

  for (const char* name : {"rank", "anchors", "reliability", "features", "train", "evaluate", "all"}) {
    app.add_subcommand(name, std::string("Run the ") + name + " pipeline stage" + (std::string(name) == "all" ? "s" : ""));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json file = nlohmann::json::object();
    if (!config_path.empty()) file = load_config_file(config_path);
    auto config = majorness::pipeline_config_from_json(file);
    if (!data_dir.empty()) config.study.data_dir = data_dir;
    if (seed) {
      config.seed = *seed;
      config.study.seed = *seed;
    }
    config.study.validate();

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "serve") {
      majorness::Study study(config.study);
      majorness::ServerOptions options;
      options.host = host;
      options.port = port;
      if (!ui_dir.empty()) options.ui_dir = ui_dir;
      majorness::StudyServer server(study, options);
      const int bound = server.bind();
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "serving " << config.study.data_dir.string() << " on http://" << host << ':' << bound << '\n';
      server.run();
      g_server = nullptr;
      return 0;
    }
    if (name == "simulate") {
      auto sim = majorness::simulation_config_from_json(file.value("simulation", nlohmann::json::object()));
      if (sim_items) sim.n_items = *sim_items;
      std::cout << majorness::simulate_study(config, sim).dump(2) << '\n';
      return 0;
    }
    std::cout << majorness::run_stage(config, majorness::stage_from_string(name)).dump(2) << '\n';
    return 0;
  } catch (const majorness::MissingPrerequisiteError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const majorness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
