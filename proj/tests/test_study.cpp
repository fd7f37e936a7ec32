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

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "majorness/audio.hpp"
#include "majorness/errors.hpp"
#include "majorness/server.hpp"
#include "majorness/simulation.hpp"
#include "majorness/study.hpp"
// Last: <resolv.h> defines a _res macro that collides with Eigen parameter names.
#include "httplib.h"

using namespace majorness;
namespace fs = std::filesystem;

namespace {

struct StudyDir {
  fs::path root;
  explicit StudyDir(std::size_t n_items, bool with_anchors = false) {
    root = fs::temp_directory_path() / ("majorness_study_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    std::vector<ItemId> ids;
    for (std::size_t i = 0; i < n_items; ++i) ids.push_back("it" + std::to_string(i));
    write_item_list(root / "items.txt", ids);
    if (with_anchors) {
      AnchorSet a;
      a.anchors = {ids.begin(), ids.begin() + std::min<std::size_t>(3, n_items)};
      fs::create_directories(root / "pipeline");
      std::ofstream out(root / "pipeline" / "anchors.txt");
      write_anchors(out, a);
    }
  }
  ~StudyDir() { fs::remove_all(root); }

  StudyConfig config() const {
    StudyConfig c;
    c.data_dir = root;
    return c;
  }
};

std::size_t line_count(const fs::path& p) {
  if (!fs::exists(p)) return 0;
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

Submission pick(const TaskAssignment& t, Choice c = Choice::kLeftMoreMajor) {
  return {t.task_id, c, std::nullopt};
}

}  // namespace

TEST_SUITE("study") {
  TEST_CASE("config validation and JSON") {
    StudyConfig c;
    CHECK_NOTHROW(c.validate());
    c.raters_per_pair = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    const auto parsed = study_config_from_json(nlohmann::json{{"raters_per_pair", 3}, {"seed", 9}});
    CHECK(parsed.raters_per_pair == 3);
    CHECK(parsed.seed == 9);
    CHECK(parsed.ratings_per_item == 5);
    CHECK(study_config_from_json(nlohmann::json::parse(to_json(parsed).dump())).raters_per_pair == 3);
  }

  TEST_CASE("item lists") {
    StudyDir d(0);
    write_item_list(d.root / "x.txt", {"a", "b"});
    CHECK(read_item_list(d.root / "x.txt") == std::vector<ItemId>{"a", "b"});
    std::ofstream(d.root / "dup.txt") << "a\nb\na\n";
    CHECK_THROWS_AS(read_item_list(d.root / "dup.txt"), ValidationError);
  }

  TEST_CASE("pair schedule is complete for small studies and connected for large ones") {
    StudyConfig c;
    CHECK(schedule_pairs(20, c).size() == 190);
    const auto big = schedule_pairs(250, c);
    CHECK(big.size() == 2500);
    // Union-find over the scheduled pairs.
    std::vector<std::size_t> parent(250);
    for (std::size_t i = 0; i < 250; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    std::set<std::pair<std::size_t, std::size_t>> distinct;
    for (auto [a, b] : big) {
      CHECK(a != b);
      distinct.insert(std::minmax(a, b));
      parent[find(a)] = find(b);
    }
    CHECK(distinct.size() == big.size());
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < 250; ++i) roots.insert(find(i));
    CHECK(roots.size() == 1);
    CHECK(schedule_pairs(250, c) == big);
  }

  TEST_CASE("missing items list is a configuration error") {
    StudyDir d(2);
    fs::remove(d.root / "items.txt");
    CHECK_THROWS_AS(Study(d.config()), ConfigError);
  }

  TEST_CASE("two items, five raters per pair") {
    StudyDir d(2);
    Study s(d.config());
    std::set<std::string> ids;
    for (int r = 0; r < 5; ++r) {
      const auto t = s.next_task("r" + std::to_string(r), TaskKind::kPair);
      REQUIRE(t);
      CHECK(std::set<ItemId>{t->left, t->right} == std::set<ItemId>{"it0", "it1"});
      ids.insert(t->task_id);
    }
    CHECK(ids.size() == 5);
    CHECK_FALSE(s.next_task("r5", TaskKind::kPair));
  }

  TEST_CASE("assignments are idempotent and submissions exactly-once") {
    StudyDir d(3);
    Study s(d.config());
    const auto t1 = s.next_task("alice", TaskKind::kPair);
    const auto t2 = s.next_task("alice", TaskKind::kPair);
    REQUIRE(t1);
    REQUIRE(t2);
    CHECK(t1->task_id == t2->task_id);

    const auto ack = s.submit(pick(*t1));
    CHECK_FALSE(ack.duplicate);
    CHECK(line_count(d.root / "comparisons.jsonl") == 1);
    const auto again = s.submit(pick(*t1, Choice::kRightMoreMajor));
    CHECK(again.duplicate);
    CHECK(again.record == ack.record);
    CHECK(line_count(d.root / "comparisons.jsonl") == 1);

    // The next task is a different pair.
    const auto t3 = s.next_task("alice", TaskKind::kPair);
    REQUIRE(t3);
    CHECK(t3->task_id != t1->task_id);
    CHECK(std::set<ItemId>{t3->left, t3->right} != std::set<ItemId>{t1->left, t1->right});
  }

  TEST_CASE("task ids are deterministic across restarts") {
    StudyDir d(4);
    std::string first;
    {
      Study s(d.config());
      first = s.next_task("bob", TaskKind::kPair)->task_id;
    }
    Study s(d.config());
    CHECK(s.next_task("bob", TaskKind::kPair)->task_id == first);
  }

  TEST_CASE("rejections and validation") {
    StudyDir d(3, true);
    Study s(d.config());
    CHECK_THROWS_AS(s.submit(Submission{"no-such-task", Choice::kEqual, std::nullopt}), TaskRejectedError);
    const auto pair_task = s.next_task("carol", TaskKind::kPair);
    REQUIRE(pair_task);
    CHECK_THROWS_AS(s.submit(Submission{pair_task->task_id, std::nullopt, std::vector<Judgment>{}}), ValidationError);

    const auto place = s.next_task("carol", TaskKind::kPlacement);
    REQUIRE(place);
    CHECK(place->anchors.size() == 3);
    // Walking past the terminal judgment breaks the protocol.
    const std::vector<Judgment> too_long = {Judgment::kItemLessMinor, Judgment::kItemLessMinor};
    CHECK_THROWS_AS(s.submit(Submission{place->task_id, std::nullopt, too_long}), ValidationError);
    CHECK_THROWS_AS(s.submit(Submission{place->task_id, std::nullopt, std::vector<Judgment>{Judgment::kItemMoreMinor}}),
                    ValidationError);
    CHECK(line_count(d.root / "ratings.jsonl") == 0);

    // From the most major anchor, one "less minor" places above every anchor.
    const auto ack = s.submit(Submission{place->task_id, std::nullopt, std::vector<Judgment>{Judgment::kItemLessMinor}});
    const auto rec = rating_record_from_json_line(ack.record);
    CHECK(rec.slot == 3);
    CHECK(rec.rating == 3);
    CHECK(line_count(d.root / "ratings.jsonl") == 1);

    CHECK_THROWS_AS(submission_from_json(nlohmann::json{{"task_id", "x"}}), ValidationError);
    CHECK_THROWS_AS(submission_from_json(nlohmann::json{{"task_id", "x"}, {"choice", "equal"}, {"walk", nlohmann::json::array()}}),
                    ValidationError);
    CHECK_THROWS_AS(submission_from_json(nlohmann::json{{"task_id", "x"}, {"choice", "sideways"}}), ValidationError);
  }

  TEST_CASE("placement needs anchors") {
    StudyDir d(3);
    Study s(d.config());
    CHECK_THROWS_AS(s.next_task("dave", TaskKind::kPlacement), StateError);
  }

  TEST_CASE("placement coverage") {
    StudyDir d(3, true);
    auto cfg = d.config();
    cfg.ratings_per_item = 2;
    Study s(cfg);
    std::map<ItemId, int> per_item;
    for (int r = 0; r < 4; ++r) {
      const RaterId rater = "p" + std::to_string(r);
      while (auto t = s.next_task(rater, TaskKind::kPlacement)) {
        s.submit(Submission{t->task_id, std::nullopt, std::vector<Judgment>{Judgment::kItemLessMinor}});
        ++per_item[t->item];
      }
    }
    CHECK(per_item.size() == 3);
    for (const auto& [item, n] : per_item) CHECK(n == 2);
    CHECK(s.status().placement_items_complete == 3);
  }

  TEST_CASE("expired tasks are rejected and their units return to the pool") {
    StudyDir d(2);
    auto cfg = d.config();
    cfg.raters_per_pair = 1;
    double now = 1000.0;
    Study s(cfg, [&] { return now; });
    const auto t = s.next_task("erin", TaskKind::kPair);
    REQUIRE(t);
    CHECK_FALSE(s.next_task("frank", TaskKind::kPair));
    now += cfg.task_expiry_seconds + 1.0;
    CHECK_THROWS_AS(s.submit(pick(*t)), TaskRejectedError);
    const auto t2 = s.next_task("frank", TaskKind::kPair);
    REQUIRE(t2);
    s.submit(pick(*t2));
    CHECK(s.pair_coverage() == std::vector<std::size_t>{1});
    // Erin's expired pair is not offered to her again.
    CHECK_FALSE(s.next_task("erin", TaskKind::kPair));
  }

  TEST_CASE("restart replays state from the logs") {
    StudyDir d(5, true);
    StudyStatus before;
    std::vector<std::size_t> coverage;
    std::string last_task;
    Acknowledgement last_ack;
    {
      Study s(d.config());
      for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 4; ++k) {
          const auto t = s.next_task("r" + std::to_string(r), TaskKind::kPair);
          last_ack = s.submit(pick(*t, k % 2 ? Choice::kLeftMoreMajor : Choice::kEqual));
          last_task = t->task_id;
        }
        const auto p = s.next_task("r" + std::to_string(r), TaskKind::kPlacement);
        s.submit(Submission{p->task_id, std::nullopt, std::vector<Judgment>{Judgment::kItemMoreMinor, Judgment::kItemLessMinor}});
      }
      before = s.status();
      coverage = s.pair_coverage();
    }
    Study s(d.config());
    const auto after = s.status();
    CHECK(to_json(after) == to_json(before));
    CHECK(s.pair_coverage() == coverage);
    CHECK(after.comparison_records == 12);
    CHECK(after.rating_records == 3);
    // A retried submission after the restart is still recognized.
    const auto dup = s.submit(Submission{last_task, Choice::kEqual, std::nullopt});
    CHECK(dup.duplicate);
    CHECK(dup.record == last_ack.record);
    CHECK(line_count(d.root / "comparisons.jsonl") == 12);
  }

  TEST_CASE("concurrent raters never double-book a pair") {
    StudyDir d(8);
    Study s(d.config());
    std::vector<std::thread> threads;
    for (int r = 0; r < 12; ++r) {
      threads.emplace_back([&s, r] {
        const RaterId rater = "c" + std::to_string(r);
        while (auto t = s.next_task(rater, TaskKind::kPair)) {
          s.submit(pick(*t));
          s.submit(pick(*t));
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto c : s.pair_coverage()) CHECK(c == 5);
    CHECK(line_count(d.root / "comparisons.jsonl") == 28 * 5);
    std::set<std::tuple<RaterId, ItemId, ItemId>> seen;
    std::ifstream in(d.root / "comparisons.jsonl");
    for (std::string line; std::getline(in, line);) {
      const auto j = nlohmann::json::parse(line);
      const auto left = j.at("left").get<std::string>(), right = j.at("right").get<std::string>();
      const auto& [a, b] = std::minmax(left, right);
      CHECK(seen.insert({j.at("rater").get<std::string>(), a, b}).second);
    }
  }

  TEST_CASE("HTTP API") {
    StudyDir d(3, true);
    fs::create_directories(d.root / "audio");
    write_wav_file(d.root / "audio" / "it0.wav", synthesize_triad(60, true, 0.5));
    Study s(d.config());
    StudyServer server(s, {"127.0.0.1", 0, std::nullopt});
    const int port = server.bind();
    std::thread runner([&] { server.run(); });
    server.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);

    auto res = cli.Get("/api/task?rater=h1&kind=pair");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto task = nlohmann::json::parse(res->body);
    CHECK(task.at("status") == "assigned");
    const auto task_id = task.at("task_id").get<std::string>();

    const nlohmann::json body = {{"task_id", task_id}, {"choice", "right_more_major"}};
    res = cli.Post("/api/annotation", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(nlohmann::json::parse(res->body).at("status") == "accepted");
    res = cli.Post("/api/annotation", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body).at("status") == "duplicate");

    res = cli.Post("/api/annotation", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    res = cli.Post("/api/annotation", nlohmann::json{{"task_id", "bogus"}, {"choice", "equal"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
    res = cli.Get("/api/task");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Get("/api/task?rater=h1&kind=placement");
    REQUIRE(res);
    task = nlohmann::json::parse(res->body);
    CHECK(task.at("kind") == "placement");
    CHECK(task.at("anchors").size() == 3);
    const nlohmann::json walk = {{"task_id", task.at("task_id")}, {"walk", {"item_more_minor", "item_more_minor", "item_more_minor"}}};
    res = cli.Post("/api/annotation", walk.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(nlohmann::json::parse(res->body).at("record").at("rating") == 1);

    res = cli.Get("/api/audio/it0");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.substr(0, 4) == "RIFF");
    res = cli.Get("/api/audio/it0", {{"Range", "bytes=0-99"}});
    REQUIRE(res);
    CHECK(res->status == 206);
    CHECK(res->body.size() == 100);
    res = cli.Get("/api/audio/it1");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = cli.Get("/api/audio/..%2Fitems.txt");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = cli.Get("/api/study/status");
    REQUIRE(res);
    const auto status = nlohmann::json::parse(res->body);
    CHECK(status.at("comparison_records") == 1);
    CHECK(status.at("rating_records") == 1);

    server.stop();
    runner.join();
  }
}
