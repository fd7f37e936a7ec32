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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "majorness/errors.hpp"
#include "majorness/types.hpp"

namespace majorness {

// Product-moment correlation. Requires equal lengths >= 3 and nonzero
// variance in both arguments.
template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) {
    throw ParameterError("pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  }
  if (x.size() < 3) throw InsufficientDataError("pearson needs at least 3 pairs");
  const VectorXd xc = x.template cast<double>().reshaped().array() - x.template cast<double>().mean();
  const VectorXd yc = y.template cast<double>().reshaped().array() - y.template cast<double>().mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatisticError("pearson: zero variance input");
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  using Map = Eigen::Map<const VectorXd>;
  return pearson(Map(x.data(), static_cast<Eigen::Index>(x.size())),
                 Map(y.data(), static_cast<Eigen::Index>(y.size())));
}

// 1-based fractional ranks; ties share their average rank.
template <typename Derived>
VectorXd fractional_ranks(const Eigen::MatrixBase<Derived>& x) {
  const auto n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) == x(order[static_cast<std::size_t>(i)])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[static_cast<std::size_t>(k)]) = avg;
    i = j + 1;
  }
  return ranks;
}

template <typename DerivedX, typename DerivedY>
double spearman(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  return pearson(fractional_ranks(x), fractional_ranks(y));
}

// Kendall's tau-b.
template <typename DerivedX, typename DerivedY>
double kendall_tau(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw ParameterError("kendall_tau: length mismatch");
  if (x.size() < 2) throw InsufficientDataError("kendall_tau needs at least 2 pairs");
  double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = i + 1; j < x.size(); ++j) {
      const double dx = static_cast<double>(x(i)) - static_cast<double>(x(j));
      const double dy = static_cast<double>(y(i)) - static_cast<double>(y(j));
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ties_x += 1.0;
      } else if (dy == 0.0) {
        ties_y += 1.0;
      } else if ((dx > 0) == (dy > 0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
  if (denom == 0.0) throw UndefinedStatisticError("kendall_tau: constant input");
  return (concordant - discordant) / denom;
}

// Unbiased (n - 1) variance.
template <typename Derived>
double sample_variance(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() < 2) return 0.0;
  const double m = x.template cast<double>().mean();
  return (x.template cast<double>().array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

inline double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace majorness
