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

#include "majorness/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "json.hpp"

#include "majorness/errors.hpp"
#include "majorness/stats.hpp"
#include "text_util.hpp"

namespace majorness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

RaterMatrix RaterMatrix::without_raters(const std::vector<RaterId>& removed) const {
  const std::set<RaterId> drop(removed.begin(), removed.end());
  RaterMatrix out;
  out.items = items;
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < raters.size(); ++r) {
    if (!drop.count(raters[r])) {
      keep.push_back(static_cast<Eigen::Index>(r));
      out.raters.push_back(raters[r]);
    }
  }
  out.values = values(Eigen::all, keep);
  return out;
}

void validate(const RaterMatrix& m) {
  if (static_cast<std::size_t>(m.values.rows()) != m.items.size() ||
      static_cast<std::size_t>(m.values.cols()) != m.raters.size()) {
    throw ValidationError("rater matrix shape does not match its item/rater id lists");
  }
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    bool any = false;
    for (Eigen::Index r = 0; r < m.values.cols(); ++r) {
      const double v = m.values(i, r);
      if (RaterMatrix::missing(v)) continue;
      any = true;
      if (v < kMinRating || v > kMaxRating) {
        throw ValidationError("rating " + detail::format_double(v) + " for item '" +
                              m.items[static_cast<std::size_t>(i)] + "' outside [1, 10]");
      }
    }
    if (!any) throw ValidationError("item '" + m.items[static_cast<std::size_t>(i)] + "' has no ratings");
  }
}

RaterMatrix rater_matrix_from_ratings(const std::vector<RatingRecord>& records) {
  std::map<ItemId, Eigen::Index> item_index;
  std::map<RaterId, Eigen::Index> rater_index;
  for (const auto& r : records) {
    item_index.emplace(r.item, 0);
    rater_index.emplace(r.rater, 0);
  }
  RaterMatrix m;
  for (auto& [id, idx] : item_index) {
    idx = static_cast<Eigen::Index>(m.items.size());
    m.items.push_back(id);
  }
  for (auto& [id, idx] : rater_index) {
    idx = static_cast<Eigen::Index>(m.raters.size());
    m.raters.push_back(id);
  }
  const auto rows = static_cast<Eigen::Index>(m.items.size());
  const auto cols = static_cast<Eigen::Index>(m.raters.size());
  MatrixXd sum = MatrixXd::Zero(rows, cols);
  MatrixXd count = MatrixXd::Zero(rows, cols);
  for (const auto& r : records) {
    const auto i = item_index.at(r.item);
    const auto j = rater_index.at(r.rater);
    sum(i, j) += r.rating;
    count(i, j) += 1.0;
  }
  m.values = (count.array() > 0).select(sum.array() / count.array(), kNaN);
  return m;
}

void write_rater_matrix_csv(std::ostream& out, const RaterMatrix& m) {
  out << "item_id";
  for (const auto& r : m.raters) out << ',' << r;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.items[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < m.values.cols(); ++r) {
      out << ',';
      if (!RaterMatrix::missing(m.values(i, r))) out << detail::format_double(m.values(i, r));
    }
    out << '\n';
  }
}

RaterMatrix read_rater_matrix_csv(std::istream& in) {
  RaterMatrix m;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (header) {
      if (fields.size() < 2) throw ValidationError("rater matrix header needs at least one rater");
      m.raters.assign(fields.begin() + 1, fields.end());
      header = false;
      continue;
    }
    if (fields.size() != m.raters.size() + 1) {
      throw ValidationError("rater matrix row has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(m.raters.size() + 1));
    }
    m.items.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      row.push_back(fields[c].empty() ? kNaN : detail::parse_double_or_throw(fields[c], "rating"));
    }
    rows.push_back(std::move(row));
  }
  if (header) throw ValidationError("rater matrix CSV is empty");
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.raters.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  validate(m);
  return m;
}

std::optional<double> cronbach_alpha(const RaterMatrix& matrix) {
  const auto k = matrix.n_raters();
  if (k < 2) throw InsufficientDataError("Cronbach's alpha needs at least 2 raters");
  std::vector<Eigen::Index> complete;
  for (Eigen::Index i = 0; i < matrix.n_items(); ++i) {
    if (!matrix.values.row(i).array().isNaN().any()) complete.push_back(i);
  }
  if (complete.size() < 2) {
    throw InsufficientDataError("Cronbach's alpha needs at least 2 items rated by every rater, got " +
                                std::to_string(complete.size()));
  }
  const MatrixXd x = matrix.values(complete, Eigen::all);
  const double total_var = sample_variance(x.rowwise().sum());
  if (total_var == 0.0) return std::nullopt;
  double item_var = 0.0;
  for (Eigen::Index r = 0; r < k; ++r) item_var += sample_variance(x.col(r));
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

double krippendorff_alpha(const RaterMatrix& matrix, KrippendorffMetric metric) {
  // Distinct values in ascending order index the coincidence matrix.
  std::vector<double> values;
  std::vector<std::vector<double>> units;
  for (Eigen::Index i = 0; i < matrix.n_items(); ++i) {
    std::vector<double> unit;
    for (Eigen::Index r = 0; r < matrix.n_raters(); ++r) {
      if (!RaterMatrix::missing(matrix.values(i, r))) unit.push_back(matrix.values(i, r));
    }
    if (unit.size() >= 2) {
      values.insert(values.end(), unit.begin(), unit.end());
      units.push_back(std::move(unit));
    }
  }
  if (units.empty()) throw InsufficientDataError("Krippendorff's alpha needs an item with >= 2 ratings");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const auto v = static_cast<Eigen::Index>(values.size());
  auto index_of = [&](double x) {
    return static_cast<Eigen::Index>(std::lower_bound(values.begin(), values.end(), x) - values.begin());
  };

  MatrixXd coincidence = MatrixXd::Zero(v, v);
  for (const auto& unit : units) {
    const double w = 1.0 / static_cast<double>(unit.size() - 1);
    for (std::size_t a = 0; a < unit.size(); ++a) {
      for (std::size_t b = 0; b < unit.size(); ++b) {
        if (a != b) coincidence(index_of(unit[a]), index_of(unit[b])) += w;
      }
    }
  }
  const VectorXd marginals = coincidence.rowwise().sum();
  const double n = marginals.sum();

  MatrixXd delta2(v, v);
  for (Eigen::Index c = 0; c < v; ++c) {
    for (Eigen::Index k = 0; k < v; ++k) {
      if (metric == KrippendorffMetric::kInterval) {
        const double d = values[static_cast<std::size_t>(c)] - values[static_cast<std::size_t>(k)];
        delta2(c, k) = d * d;
      } else {
        const auto lo = std::min(c, k);
        const auto hi = std::max(c, k);
        const double d = marginals.segment(lo, hi - lo + 1).sum() - 0.5 * (marginals(c) + marginals(k));
        delta2(c, k) = d * d;
      }
    }
  }
  const double observed = (coincidence.array() * delta2.array()).sum() / n;
  const double expected = (marginals * marginals.transpose()).cwiseProduct(delta2).sum() / (n * (n - 1.0));
  if (expected == 0.0) {
    throw UndefinedStatisticError("Krippendorff's alpha undefined: all pairable values are equal");
  }
  return 1.0 - observed / expected;
}

double rater_agreement(const RaterMatrix& matrix, Eigen::Index rater, const std::vector<bool>& active) {
  std::vector<double> own, others;
  for (Eigen::Index i = 0; i < matrix.n_items(); ++i) {
    const double x = matrix.values(i, rater);
    if (RaterMatrix::missing(x)) continue;
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < matrix.n_raters(); ++r) {
      if (r == rater || !active[static_cast<std::size_t>(r)]) continue;
      const double y = matrix.values(i, r);
      if (RaterMatrix::missing(y)) continue;
      sum += y;
      ++count;
    }
    if (count == 0) continue;
    own.push_back(x);
    others.push_back(sum / count);
  }
  try {
    return pearson(own, others);
  } catch (const Error&) {
    return kNaN;
  }
}

namespace {

void fill_alphas(const RaterMatrix& m, std::optional<double>& cronbach, double& kripp,
                 std::string* note) {
  try {
    cronbach = cronbach_alpha(m);
    if (!cronbach && note) *note = "total-score variance is zero";
  } catch (const InsufficientDataError& e) {
    cronbach.reset();
    if (note) *note = e.what();
  }
  try {
    kripp = krippendorff_alpha(m);
  } catch (const Error&) {
    kripp = kNaN;
  }
}

}  // namespace

FilterResult filter_raters(const RaterMatrix& matrix, const FilterPolicy& policy) {
  const auto total = matrix.n_raters();
  if (total < 3) {
    throw InsufficientDataError("rater filtering needs at least 3 raters, got " + std::to_string(total));
  }
  std::vector<bool> active(static_cast<std::size_t>(total), true);
  ReliabilityReport report;
  report.policy = policy;
  fill_alphas(matrix, report.cronbach_alpha_before, report.krippendorff_alpha_before, nullptr);

  std::size_t active_count = static_cast<std::size_t>(total);
  while (true) {
    Eigen::Index worst = -1;
    double worst_corr = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < total; ++r) {
      if (!active[static_cast<std::size_t>(r)]) continue;
      const double corr = rater_agreement(matrix, r, active);
      report.per_rater_agreement[matrix.raters[static_cast<std::size_t>(r)]] = corr;
      if (!std::isnan(corr) && corr < worst_corr) {
        worst_corr = corr;
        worst = r;
      }
    }
    if (worst < 0 || worst_corr >= policy.min_corr) break;
    const double frac = static_cast<double>(report.removed_raters.size() + 1) / static_cast<double>(total);
    if (frac > policy.max_removed_frac) break;
    if (active_count - 1 < 2) {
      throw ParameterError("filter policy (min_corr=" + detail::format_double(policy.min_corr) +
                           ") would remove all raters");
    }
    active[static_cast<std::size_t>(worst)] = false;
    --active_count;
    report.removed_raters.push_back(matrix.raters[static_cast<std::size_t>(worst)]);
  }

  FilterResult result;
  result.kept = matrix.without_raters(report.removed_raters);
  fill_alphas(result.kept, report.cronbach_alpha, report.krippendorff_alpha, &report.cronbach_note);
  result.report = std::move(report);
  return result;
}

std::string to_json(const ReliabilityReport& report) {
  auto number_or_null = [](double v) { return std::isnan(v) ? nlohmann::ordered_json() : nlohmann::ordered_json(v); };
  auto opt = [&](const std::optional<double>& v) { return v ? number_or_null(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["cronbach_alpha"] = opt(report.cronbach_alpha);
  if (!report.cronbach_note.empty()) j["cronbach_note"] = report.cronbach_note;
  j["krippendorff_alpha"] = number_or_null(report.krippendorff_alpha);
  j["cronbach_alpha_before"] = opt(report.cronbach_alpha_before);
  j["krippendorff_alpha_before"] = number_or_null(report.krippendorff_alpha_before);
  j["removed_raters"] = report.removed_raters;
  auto agreement = nlohmann::ordered_json::object();
  for (const auto& [rater, corr] : report.per_rater_agreement) agreement[rater] = number_or_null(corr);
  j["per_rater_agreement"] = std::move(agreement);
  j["policy"] = {{"min_corr", report.policy.min_corr}, {"max_removed_frac", report.policy.max_removed_frac}};
  return j.dump(2);
}

}  // namespace majorness
