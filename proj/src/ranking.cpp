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

#include "majorness/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "majorness/errors.hpp"
#include "text_util.hpp"

namespace majorness {

namespace {

using OrderedJson = nlohmann::ordered_json;

// Dense pairwise tallies. wins(i, j) is the (possibly fractional) number of
// times i was judged more major than j.
struct PairTallies {
  std::vector<ItemId> items;
  MatrixXd wins;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;
};

PairTallies tally(const ComparisonSet& set, TiePolicy tie_policy, double regularization) {
  PairTallies t;
  t.items.assign(set.items.begin(), set.items.end());
  std::map<ItemId, Eigen::Index> index;
  for (std::size_t i = 0; i < t.items.size(); ++i) index[t.items[i]] = static_cast<Eigen::Index>(i);
  const auto n = static_cast<Eigen::Index>(t.items.size());
  t.wins = MatrixXd::Zero(n, n);
  t.observed.setConstant(n, n, false);
  for (const auto& r : set.records) {
    const auto a = index.at(r.left);
    const auto b = index.at(r.right);
    t.observed(a, b) = t.observed(b, a) = true;
    switch (r.choice) {
      case Choice::kLeftMoreMajor:
        t.wins(a, b) += 1.0;
        break;
      case Choice::kRightMoreMajor:
        t.wins(b, a) += 1.0;
        break;
      case Choice::kEqual:
        if (tie_policy == TiePolicy::kHalf) {
          t.wins(a, b) += 0.5;
          t.wins(b, a) += 0.5;
        }
        break;
    }
  }
  if (regularization > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && t.observed(i, j)) t.wins(i, j) += regularization;
      }
    }
  }
  return t;
}

std::string join_ids(const std::vector<ItemId>& ids) {
  std::string s;
  for (const auto& id : ids) {
    if (!s.empty()) s += ", ";
    s += id;
  }
  return s;
}

// Every item must reach every other along "beat" edges; otherwise some
// theta runs off to +/- infinity.
void require_strongly_connected(const PairTallies& t) {
  const auto n = static_cast<Eigen::Index>(t.items.size());
  auto reach = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        const double w = forward ? t.wins(u, v) : t.wins(v, u);
        if (w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  if (reach(true) && reach(false)) return;

  std::vector<ItemId> all_wins, all_losses;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (t.wins.col(i).sum() == 0.0) all_wins.push_back(t.items[static_cast<std::size_t>(i)]);
    if (t.wins.row(i).sum() == 0.0) all_losses.push_back(t.items[static_cast<std::size_t>(i)]);
  }
  std::string msg = "Bradley-Terry maximum likelihood diverges without regularization";
  if (!all_wins.empty()) msg += "; items that never lose: " + join_ids(all_wins);
  if (!all_losses.empty()) msg += "; items that never win: " + join_ids(all_losses);
  if (all_wins.empty() && all_losses.empty()) msg += "; win graph is not strongly connected";
  throw ConvergenceError(msg);
}

double log_likelihood(const MatrixXd& wins, const VectorXd& theta) {
  double ll = 0.0;
  const auto n = wins.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || wins(i, j) == 0.0) continue;
      const double d = theta(j) - theta(i);
      // log(e^ti / (e^ti + e^tj)) = -log(1 + e^(tj - ti))
      ll -= wins(i, j) * (d > 0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d)));
    }
  }
  return ll;
}

}  // namespace

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::kLeftMoreMajor:
      return "left_more_major";
    case Choice::kRightMoreMajor:
      return "right_more_major";
    case Choice::kEqual:
      return "equal";
  }
  return "equal";
}

Choice choice_from_string(std::string_view name) {
  if (name == "left_more_major") return Choice::kLeftMoreMajor;
  if (name == "right_more_major") return Choice::kRightMoreMajor;
  if (name == "equal") return Choice::kEqual;
  throw ValidationError("unknown choice '" + std::string(name) + "'");
}

std::string to_json_line(const ComparisonRecord& record) {
  OrderedJson j;
  j["rater"] = record.rater;
  j["left"] = record.left;
  j["right"] = record.right;
  j["choice"] = std::string(to_string(record.choice));
  j["ts"] = record.timestamp;
  return j.dump();
}

void ComparisonSet::add(ComparisonRecord record) {
  items.insert(record.left);
  items.insert(record.right);
  records.push_back(std::move(record));
}

namespace {

void validate(const ComparisonRecord& r) {
  if (r.left.empty() || r.right.empty()) {
    throw ValidationError("comparison by rater '" + r.rater + "' references an empty item id");
  }
  if (r.left == r.right) {
    throw ValidationError("comparison by rater '" + r.rater + "' compares item '" + r.left +
                          "' with itself");
  }
}

class Deduplicator {
 public:
  explicit Deduplicator(IngestResult& result) : result_(result) {}
  void push(ComparisonRecord r) {
    validate(r);
    if (!seen_.insert(r).second) {
      ++result_.duplicates_dropped;
      return;
    }
    result_.set.add(std::move(r));
  }

 private:
  IngestResult& result_;
  std::set<ComparisonRecord> seen_;
};

}  // namespace

IngestResult ingest_comparisons(std::istream& in) {
  IngestResult result;
  Deduplicator dedup(result);
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto j = OrderedJson::parse(line, nullptr, /*allow_exceptions=*/false);
    const bool schema_ok = j.is_object() && j.contains("rater") && j["rater"].is_string() &&
                           j.contains("left") && j["left"].is_string() && j.contains("right") &&
                           j["right"].is_string() && j.contains("choice") &&
                           j["choice"].is_string() && j.contains("ts") && j["ts"].is_number();
    if (!schema_ok) {
      ++result.malformed_skipped;
      continue;
    }
    ComparisonRecord r;
    try {
      r.choice = choice_from_string(j["choice"].get<std::string>());
    } catch (const ValidationError&) {
      ++result.malformed_skipped;
      continue;
    }
    r.rater = j["rater"].get<std::string>();
    r.left = j["left"].get<std::string>();
    r.right = j["right"].get<std::string>();
    r.timestamp = j["ts"].get<double>();
    dedup.push(std::move(r));
  }
  if (in.bad()) throw IoError("read error while ingesting comparisons");
  return result;
}

IngestResult ingest_comparisons(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return ingest_comparisons(in);
}

IngestResult ingest_comparisons(const std::vector<ComparisonRecord>& events) {
  IngestResult result;
  Deduplicator dedup(result);
  for (const auto& e : events) dedup.push(e);
  return result;
}

std::vector<std::vector<ItemId>> connected_components(const ComparisonSet& set) {
  std::vector<ItemId> items(set.items.begin(), set.items.end());
  std::map<ItemId, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) index[items[i]] = i;

  std::vector<std::size_t> parent(items.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& r : set.records) {
    const auto a = find(index.at(r.left));
    const auto b = find(index.at(r.right));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::size_t, std::vector<ItemId>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) groups[find(i)].push_back(items[i]);
  std::vector<std::vector<ItemId>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

double bradley_terry_log_likelihood(const ComparisonSet& set, const std::vector<ItemId>& items,
                                    const VectorXd& theta, TiePolicy tie_policy,
                                    double regularization) {
  ComparisonSet restricted;
  restricted.items = std::set<ItemId>(items.begin(), items.end());
  restricted.records = set.records;
  const auto t = tally(restricted, tie_policy, regularization);
  // tally() orders items lexicographically; map theta into that order.
  std::map<ItemId, double> by_id;
  for (std::size_t i = 0; i < items.size(); ++i) by_id[items[i]] = theta(static_cast<Eigen::Index>(i));
  VectorXd ordered(static_cast<Eigen::Index>(t.items.size()));
  for (std::size_t i = 0; i < t.items.size(); ++i) ordered(static_cast<Eigen::Index>(i)) = by_id.at(t.items[i]);
  return log_likelihood(t.wins, ordered);
}

Ranking fit_bradley_terry(const ComparisonSet& set, const BradleyTerryConfig& config) {
  if (set.items.size() < 2) {
    throw InsufficientDataError("Bradley-Terry fit needs at least 2 items, got " +
                                std::to_string(set.items.size()));
  }
  if (config.tol <= 0.0 || config.max_iter == 0) {
    throw ParameterError("Bradley-Terry config needs tol > 0 and max_iter > 0");
  }
  if (config.regularization < 0.0) throw ParameterError("regularization must be >= 0");

  const auto components = connected_components(set);
  if (components.size() > 1) {
    std::string msg = "comparison graph is disconnected into " +
                      std::to_string(components.size()) + " components:";
    for (const auto& c : components) msg += " {" + join_ids(c) + "}";
    throw DisconnectedGraphError(msg);
  }

  const auto t = tally(set, config.tie_policy, config.regularization);
  if (config.regularization == 0.0) require_strongly_connected(t);

  const auto n = static_cast<Eigen::Index>(t.items.size());
  const MatrixXd games = t.wins + t.wins.transpose();
  const VectorXd total_wins = t.wins.rowwise().sum();

  VectorXd theta = VectorXd::Zero(n);
  std::size_t iter = 0;
  bool converged = false;
  for (; iter < config.max_iter && !converged; ++iter) {
    const VectorXd strength = theta.array().exp();
    VectorXd next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double denom = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i && games(i, j) > 0.0) denom += games(i, j) / (strength(i) + strength(j));
      }
      next(i) = std::log(total_wins(i) / denom);
    }
    next.array() -= next.mean();
    if (!next.allFinite()) {
      throw ConvergenceError("Bradley-Terry iteration produced non-finite strengths at iteration " +
                             std::to_string(iter));
    }
    converged = (next - theta).cwiseAbs().maxCoeff() < config.tol;
    theta = std::move(next);
  }
  if (!converged) {
    throw ConvergenceError("Bradley-Terry did not converge within " +
                           std::to_string(config.max_iter) + " iterations");
  }

  Ranking ranking;
  ranking.iterations = iter;
  const auto data = tally(set, config.tie_policy, 0.0);
  ranking.log_likelihood = log_likelihood(data.wins, theta);
  ranking.entries.reserve(t.items.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    ranking.entries.push_back({t.items[static_cast<std::size_t>(i)], theta(i), 0});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const auto& a, const auto& b) {
    if (a.theta != b.theta) return a.theta > b.theta;
    return a.item_id < b.item_id;
  });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) ranking.entries[i].rank = i + 1;
  return ranking;
}

std::string Ranking::fingerprint() const {
  std::ostringstream ss;
  write_ranking_csv(ss, *this);
  return detail::hex64(detail::fnv1a(ss.str()));
}

AnchorSet select_anchors(const Ranking& ranking, std::size_t k) {
  const std::size_t n = ranking.size();
  if (k < 2 || k > n) {
    throw ParameterError("anchor count k=" + std::to_string(k) + " must satisfy 2 <= k <= N=" +
                         std::to_string(n));
  }
  AnchorSet set;
  set.source_ranking_id = ranking.fingerprint();
  for (std::size_t i = 1; i <= k; ++i) {
    // round((i - 0.5) * N / k), halves rounded up, in integer arithmetic
    const std::size_t num = (2 * i - 1) * n;
    const std::size_t den = 2 * k;
    const std::size_t rank = (2 * num + den) / (2 * den);
    set.anchors.push_back(ranking.entries.at(rank - 1).item_id);
  }
  std::reverse(set.anchors.begin(), set.anchors.end());
  return set;
}

void write_ranking_csv(std::ostream& out, const Ranking& ranking) {
  out << "item_id,theta,rank\n";
  for (const auto& e : ranking.entries) {
    out << e.item_id << ',' << detail::format_double(e.theta) << ',' << e.rank << '\n';
  }
}

Ranking read_ranking_csv(std::istream& in) {
  Ranking ranking;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (header) {
      header = false;
      if (fields.size() >= 1 && fields[0] == "item_id") continue;
    }
    if (fields.size() != 3) throw ValidationError("ranking CSV row needs 3 fields: " + line);
    RankingEntry e;
    e.item_id = fields[0];
    e.theta = detail::parse_double_or_throw(fields[1], "theta");
    e.rank = static_cast<std::size_t>(detail::parse_double_or_throw(fields[2], "rank"));
    ranking.entries.push_back(std::move(e));
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const auto& a, const auto& b) { return a.rank < b.rank; });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (ranking.entries[i].rank != i + 1) throw ValidationError("ranking CSV ranks are not 1..N");
  }
  return ranking;
}

void write_anchors(std::ostream& out, const AnchorSet& anchors) {
  for (const auto& id : anchors.anchors) out << id << '\n';
}

AnchorSet read_anchors(std::istream& in) {
  AnchorSet set;
  std::string line;
  while (std::getline(in, line)) {
    const auto id = detail::trim(line);
    if (!id.empty()) set.anchors.emplace_back(id);
  }
  return set;
}

}  // namespace majorness
