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
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "majorness/errors.hpp"
#include "majorness/reliability.hpp"

using namespace majorness;
using namespace test_oracles;

namespace {

RaterMatrix random_matrix(std::size_t items, std::size_t raters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(1, 10);
  std::vector<std::vector<double>> rows(items, std::vector<double>(raters));
  for (auto& r : rows) {
    for (auto& v : r) v = d(rng);
  }
  return matrix_of(rows);
}

}  // namespace

TEST_SUITE("reliability") {
  TEST_CASE("cronbach: identical raters give 1") {
    const auto m = matrix_of({{1, 1}, {4, 4}, {6, 6}, {9, 9}});
    REQUIRE(cronbach_alpha(m).has_value());
    CHECK(*cronbach_alpha(m) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("cronbach: 4x3 matrix matches the hand formula") {
    const std::vector<std::vector<double>> rows = {{1, 2, 1}, {2, 3, 2}, {3, 4, 3}, {4, 5, 4}};
    CHECK(std::abs(*cronbach_alpha(matrix_of(rows)) - cronbach_oracle(rows)) < 1e-12);
    const std::vector<std::vector<double>> noisy = {{1, 3, 2}, {2, 2, 4}, {5, 4, 3}, {4, 6, 6}, {7, 5, 8}};
    CHECK(std::abs(*cronbach_alpha(matrix_of(noisy)) - cronbach_oracle(noisy)) < 1e-12);
  }

  TEST_CASE("cronbach: degenerate and insufficient inputs") {
    CHECK_FALSE(cronbach_alpha(matrix_of({{5, 5, 5}, {5, 5, 5}, {5, 5, 5}})).has_value());
    CHECK_THROWS_AS(cronbach_alpha(matrix_of({{1}, {2}, {3}})), InsufficientDataError);
    CHECK_THROWS_AS(cronbach_alpha(matrix_of({{1, 2}, {3, kNa}, {kNa, 4}})), InsufficientDataError);
  }

  TEST_CASE("cronbach: complete-case restriction") {
    const auto full = matrix_of({{1, 2}, {3, 3}, {5, 6}, {7, 7}});
    const auto sparse = matrix_of({{1, 2}, {3, 3}, {5, 6}, {7, 7}, {2, kNa}, {kNa, 9}});
    CHECK(*cronbach_alpha(sparse) == doctest::Approx(*cronbach_alpha(full)).epsilon(1e-12));
  }

  TEST_CASE("krippendorff: published example with missing data") {
    const auto m = published_example();
    const double interval = krippendorff_alpha(m, KrippendorffMetric::kInterval);
    const double ordinal = krippendorff_alpha(m, KrippendorffMetric::kOrdinal);
    CHECK(std::abs(interval - krippendorff_oracle(m, false)) < 1e-9);
    CHECK(std::abs(ordinal - krippendorff_oracle(m, true)) < 1e-9);
    CHECK(interval == doctest::Approx(0.849).epsilon(5e-4));
    CHECK(ordinal == doctest::Approx(0.815).epsilon(5e-4));
  }

  TEST_CASE("krippendorff: agreement, randomness and errors") {
    CHECK(krippendorff_alpha(matrix_of({{2, 2, 2}, {5, 5, 5}, {7, 7, kNa}})) == doctest::Approx(1.0));
    const auto noise = random_matrix(1000, 5, 42);
    CHECK(std::abs(krippendorff_alpha(noise)) < 0.1);
    CHECK(std::abs(*cronbach_alpha(noise)) < 0.1);
    CHECK_THROWS_AS(krippendorff_alpha(matrix_of({{1, kNa}, {kNa, 2}})), InsufficientDataError);
    CHECK_THROWS_AS(krippendorff_alpha(matrix_of({{3, 3}, {3, 3}})), UndefinedStatisticError);
  }

  TEST_CASE("alphas are invariant under shifts and interval alpha under rescaling") {
    const std::vector<std::vector<double>> rows = {{1, 2, 1}, {2, 2, 3}, {3, 4, 3}, {4, 5, 4}, {2, 1, 1}};
    auto transform = [&](double a, double b) {
      auto copy = rows;
      for (auto& r : copy) {
        for (auto& v : r) v = a * v + b;
      }
      return matrix_of(copy);
    };
    const auto base = matrix_of(rows);
    CHECK(*cronbach_alpha(transform(1, 3)) == doctest::Approx(*cronbach_alpha(base)).epsilon(1e-12));
    CHECK(krippendorff_alpha(transform(1, 3)) == doctest::Approx(krippendorff_alpha(base)).epsilon(1e-12));
    CHECK(krippendorff_alpha(transform(1.5, 1)) == doctest::Approx(krippendorff_alpha(base)).epsilon(1e-12));
  }

  TEST_CASE("filter_raters") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) {
      const double truth = 1.0 + 8.0 * (i % 10) / 9.0;
      std::vector<double> row;
      for (int r = 0; r < 5; ++r) row.push_back(std::clamp(truth + noise(rng), 1.0, 10.0));
      rows.push_back(row);
    }
    SUBCASE("identical raters: nothing removed") {
      std::vector<std::vector<double>> same;
      for (const auto& r : rows) same.push_back({r[0], r[0], r[0], r[0]});
      const auto result = filter_raters(matrix_of(same));
      CHECK(result.report.removed_raters.empty());
      CHECK(result.kept.n_raters() == 4);
    }
    SUBCASE("negated rater is removed first") {
      auto planted = rows;
      for (auto& r : planted) r.push_back(11.0 - r[0]);
      const auto m = matrix_of(planted);
      const auto result = filter_raters(m);
      REQUIRE_FALSE(result.report.removed_raters.empty());
      CHECK(result.report.removed_raters.front() == "r5");
      CHECK(result.report.removed_raters.size() == 1);
      CHECK(*result.report.cronbach_alpha >= *result.report.cronbach_alpha_before);
      CHECK(result.report.per_rater_agreement.at("r5") < -0.9);
      // Deterministic.
      CHECK(filter_raters(m).report.removed_raters == result.report.removed_raters);
    }
    SUBCASE("two raters cannot be assessed") {
      CHECK_THROWS_AS(filter_raters(matrix_of({{1, 2}, {3, 4}, {5, 5}})), InsufficientDataError);
    }
    SUBCASE("policy that would empty the matrix") {
      FilterPolicy strict;
      strict.min_corr = 1.1;
      strict.max_removed_frac = 1.0;
      CHECK_THROWS_AS(filter_raters(matrix_of(rows), strict), ParameterError);
    }
  }

  TEST_CASE("rater matrix from ratings and CSV round trip") {
    auto rec = [](const char* rater, const char* item, int rating) {
      RatingRecord r;
      r.rater = rater;
      r.item = item;
      r.rating = rating;
      r.slot = static_cast<std::size_t>(rating);
      return r;
    };
    const auto m = rater_matrix_from_ratings({rec("x", "a", 3), rec("x", "a", 5), rec("y", "b", 7), rec("y", "a", 2)});
    REQUIRE(m.n_items() == 2);
    REQUIRE(m.n_raters() == 2);
    CHECK(m.values(0, 0) == 4.0);
    CHECK(std::isnan(m.values(1, 0)));
    std::stringstream csv;
    write_rater_matrix_csv(csv, m);
    CHECK(csv.str().rfind("item_id,x,y\n", 0) == 0);
    const auto back = read_rater_matrix_csv(csv);
    CHECK(back.raters == m.raters);
    CHECK(back.items == m.items);
    CHECK(back.values(1, 1) == 7.0);
    CHECK(std::isnan(back.values(1, 0)));
    std::istringstream bad("item_id,x\na,11\n");
    CHECK_THROWS_AS(read_rater_matrix_csv(bad), ValidationError);
  }
}
