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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "majorness/errors.hpp"
#include "majorness/placement.hpp"
#include "majorness/ranking.hpp"
#include "majorness/simulation.hpp"
#include "majorness/stats.hpp"

using namespace majorness;

namespace {

std::vector<double> latents_in_ranking_order(const Ranking& r, const std::vector<SyntheticItem>& items) {
  std::map<ItemId, double> latent;
  for (const auto& it : items) latent[it.item_id] = it.latent;
  std::vector<double> out;
  for (const auto& e : r.entries) out.push_back(latent.at(e.item_id));
  return out;
}

VectorXd thetas(const Ranking& r) {
  VectorXd t(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) t(static_cast<Eigen::Index>(i)) = r.entries[i].theta;
  return t;
}

// Ten anchors at evenly spaced latent quantiles of the corpus.
AnchorSet quantile_anchors(const std::vector<SyntheticItem>& items) {
  std::vector<const SyntheticItem*> sorted;
  for (const auto& it : items) sorted.push_back(&it);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->latent < b->latent; });
  AnchorSet a;
  for (std::size_t i = 0; i < 10; ++i) a.anchors.push_back(sorted[(2 * i + 1) * sorted.size() / 20]->item_id);
  return a;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("corpus generation") {
    CHECK_THROWS_AS(gen_corpus(0, 1), ParameterError);
    const auto a = gen_corpus(20, 5, 2.0);
    const auto b = gen_corpus(20, 5, 2.0);
    REQUIRE(a.size() == 20);
    CHECK(a.front().item_id == "item_00");
    CHECK(gen_corpus(101, 5, 0.5).back().item_id == "item_100");
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].latent == b[i].latent);
      CHECK(a[i].latent >= 0.0);
      CHECK(a[i].latent <= 1.0);
      CHECK(a[i].chord_major == b[i].chord_major);
    }
    CHECK(a[3].audio().samples == b[3].audio().samples);
    CHECK(a[3].audio().size() == 2 * 44100);
    CHECK(gen_corpus(20, 6, 2.0)[0].latent != a[0].latent);
  }

  TEST_CASE("latent 1 renders only major chords, latent 0 only minor") {
    const auto hi = make_item("hi", 1.0, 3);
    const auto lo = make_item("lo", 0.0, 3);
    CHECK(hi.major_fraction() == 1.0);
    CHECK(lo.major_fraction() == 0.0);
    CHECK(hi.audio().duration_seconds() == doctest::Approx(15.0));
  }

  TEST_CASE("mode corpus labels and keys") {
    const auto c = gen_mode_corpus(48, 48, 2);
    REQUIRE(c.size() == 96);
    std::set<int> tonics;
    for (const auto& it : c) {
      tonics.insert(it.tonic);
      if (it.item_id.starts_with("major")) CHECK(it.latent >= 0.75);
      else CHECK(it.latent <= 0.25);
    }
    CHECK(tonics.size() == 12);
  }

  TEST_CASE("noiseless pairwise choices follow the latent") {
    const auto items = gen_corpus(12, 4, 1.0);
    const auto raters = make_raters("r", 5, 0.0, 0.0, 1);
    const auto pairs = all_pairs(items.size());
    CHECK(pairs.size() == 66);
    std::map<ItemId, double> latent;
    for (const auto& it : items) latent[it.item_id] = it.latent;
    const auto recs = sim_pairwise(items, raters, pairs, 9);
    CHECK(recs.size() == 66 * 5);
    for (const auto& r : recs) {
      const bool left_higher = latent.at(r.left) > latent.at(r.right);
      CHECK(r.choice == (left_higher ? Choice::kLeftMoreMajor : Choice::kRightMoreMajor));
    }
    CHECK(sim_pairwise(items, raters, pairs, 9).back().choice == recs.back().choice);
  }

  TEST_CASE("equal latents give equal") {
    std::vector<SyntheticItem> items = {make_item("a", 0.4, 1), make_item("b", 0.4, 2)};
    const auto raters = make_raters("r", 3, 0.0, 0.0, 1);
    const auto pairs = all_pairs(2);
    for (const auto& r : sim_pairwise(items, raters, pairs, 1)) CHECK(r.choice == Choice::kEqual);
  }

  TEST_CASE("very noisy raters choose at chance") {
    std::vector<SyntheticItem> items = {make_item("a", 0.0, 1), make_item("b", 1.0, 2)};
    const auto raters = make_raters("r", 100, 1e6, 0.0, 1);
    const std::vector<ItemPair> pairs(100, ItemPair{0, 1});
    const auto recs = sim_pairwise(items, raters, pairs, 77);
    REQUIRE(recs.size() == 10000);
    double b_wins = 0;
    for (const auto& r : recs) {
      const ItemId& winner = r.choice == Choice::kLeftMoreMajor ? r.left : r.right;
      b_wins += winner == "b";
    }
    CHECK(std::abs(b_wins / 10000.0 - 0.5) <= 0.05);
  }

  TEST_CASE("raters per pair are distinct") {
    const auto items = gen_corpus(6, 2, 1.0);
    const auto raters = make_raters("r", 8, 0.1, 0.0, 1);
    const auto pairs = all_pairs(6);
    const auto recs = sim_pairwise(items, raters, pairs, 3, 5);
    CHECK(recs.size() == pairs.size() * 5);
    std::map<std::set<ItemId>, std::set<RaterId>> seen;
    for (const auto& r : recs) seen[{r.left, r.right}].insert(r.rater);
    for (const auto& [pair, who] : seen) CHECK(who.size() == 5);
  }

  TEST_CASE("noiseless placement rating counts lower anchors") {
    const auto items = gen_corpus(60, 11, 1.0);
    const auto anchors = quantile_anchors(items);
    std::map<ItemId, double> latent;
    for (const auto& it : items) latent[it.item_id] = it.latent;
    const auto raters = make_raters("p", 5, 0.0, 0.0, 1);
    const auto recs = sim_placements(items, anchors, raters, 5, 4);
    CHECK(recs.size() == 300);
    for (const auto& r : recs) {
      std::size_t lower = 0;
      for (const auto& a : anchors.anchors) lower += latent.at(a) < latent.at(r.item);
      CHECK(r.rating == std::clamp<int>(static_cast<int>(lower), 1, 10));
      // The record replays through the protocol to the same slot.
      CHECK(replay_walk(r.item, anchors, r.walk).slot() == r.slot);
    }
  }

  TEST_CASE("an item above every anchor rates 10") {
    std::vector<SyntheticItem> items = gen_corpus(30, 12, 1.0);
    const auto anchors = quantile_anchors(items);
    items.push_back(make_item("top", 1.0, 1, SynthesisConfig{.clip_seconds = 1.0}));
    const auto raters = make_raters("p", 5, 0.0, 0.0, 1);
    std::size_t seen = 0;
    for (const auto& r : sim_placements(items, anchors, raters, 5, 2)) {
      if (r.item != "top") continue;
      CHECK(r.rating == 10);
      ++seen;
    }
    CHECK(seen == 5);
    // Anchors must come from the rated corpus.
    CHECK_THROWS_AS(sim_placements(std::span(items).last(1), anchors, raters, 5, 2), ParameterError);
  }

  TEST_CASE("placement noise 0.05 keeps per-item spread small") {
    const auto items = gen_corpus(100, 13, 1.0);
    const auto anchors = quantile_anchors(items);
    const auto raters = make_raters("p", 5, 0.05, 0.0, 1);
    const auto summaries = aggregate_ratings(sim_placements(items, anchors, raters, 5, 6));
    REQUIRE(summaries.size() == 100);
    for (const auto& s : summaries) CHECK(s.std <= 1.5);
  }

  TEST_CASE("mean ratings avoid the ends of the scale") {
    // Noiseless raters put a fifth of a uniform corpus at 1 or 10 (slots 0
    // and 1 share rating 1); rater noise pulls the means inward.
    const auto items = gen_corpus(200, 14, 1.0);
    const auto anchors = quantile_anchors(items);
    const auto raters = make_raters("p", 5, 0.15, 0.03, 15);
    const auto summaries = aggregate_ratings(sim_placements(items, anchors, raters, 5, 16));
    std::size_t extreme = 0;
    for (const auto& s : summaries) extreme += std::lround(s.mean_rating) == 1 || std::lround(s.mean_rating) == 10;
    MESSAGE("items at rating 1 or 10: " << extreme << " of " << summaries.size());
    CHECK(static_cast<double>(extreme) < 0.10 * static_cast<double>(summaries.size()));
  }

  TEST_CASE("Bradley-Terry recovers the simulated order") {
    const auto items = gen_corpus(100, 21, 1.0);
    const auto pairs = all_pairs(items.size());
    SUBCASE("noiseless raters give the exact order") {
      const auto raters = make_raters("r", 5, 0.0, 0.0, 1);
      const auto fit = fit_bradley_terry(ingest_comparisons(sim_pairwise(items, raters, pairs, 1)).set);
      const auto lat = latents_in_ranking_order(fit, items);
      CHECK(kendall_tau(thetas(fit), Eigen::Map<const VectorXd>(lat.data(), 100)) == doctest::Approx(1.0));
    }
    SUBCASE("noise 0.1 keeps Spearman above 0.95") {
      const auto raters = make_raters("r", 80, 0.1, 0.0, 2);
      const auto fit = fit_bradley_terry(ingest_comparisons(sim_pairwise(items, raters, pairs, 2, 5)).set);
      const auto lat = latents_in_ranking_order(fit, items);
      CHECK(spearman(thetas(fit), Eigen::Map<const VectorXd>(lat.data(), 100)) >= 0.95);
    }
  }
}
