/* Copyright 2026 The swunet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "swunet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "swunet/errors.hpp"

namespace swunet {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"accuracy", "specificity",
                                                 "precision", "recall", "dice"};
  return names;
}

double metric_value(const MetricsReport& r, int index) {
  switch (index) {
    case 0: return r.accuracy;
    case 1: return r.specificity;
    case 2: return r.precision;
    case 3: return r.recall;
    case 4: return r.dice;
    default: throw ArgumentError("metric index out of range");
  }
}

ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("mask dimensions differ: " + std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + " vs " + std::to_string(gt.width) +
                     "x" + std::to_string(gt.height));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const std::uint8_t p = pred.labels[i], g = gt.labels[i];
    if (p > 1 || g > 1) throw DataError("mask values must be 0 or 1");
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics(const ConfusionCounts& c) {
  MetricsReport r;
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.specificity = ratio(c.tn, c.fp + c.tn);
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return r;
}

CategoryTable aggregate_by_category(std::span<const CategorizedReport> items) {
  if (items.empty()) throw ArgumentError("aggregate_by_category: no images");
  CategoryTable table;
  std::map<int, std::array<double, kMetricCount>> sums;
  std::array<double, kMetricCount> overall{};
  for (const auto& it : items) {
    if (it.category < 1 || it.category > 10) {
      throw ArgumentError("category " + std::to_string(it.category) + " outside 1..10");
    }
    auto& s = sums[it.category];
    for (int m = 0; m < kMetricCount; ++m) {
      s[m] += metric_value(it.report, m);
      overall[m] += metric_value(it.report, m);
    }
    ++table.image_counts[it.category];
  }
  auto to_report = [](const std::array<double, kMetricCount>& s, double n) {
    return MetricsReport{s[0] / n, s[1] / n, s[2] / n, s[3] / n, s[4] / n};
  };
  for (const auto& [cat, s] : sums) {
    table.per_category[cat] = to_report(s, static_cast<double>(table.image_counts[cat]));
  }
  table.images = items.size();
  table.overall = to_report(overall, static_cast<double>(items.size()));
  return table;
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

}  // namespace

BoxplotStats boxplot_stats(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("boxplot_stats: no values");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxplotStats b;
  b.min = s.front();
  b.max = s.back();
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  double total = 0;
  for (double v : s) total += v;
  b.mean = total / static_cast<double>(s.size());
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = *std::find_if(s.begin(), s.end(), [&](double v) { return v >= lo_fence; });
  b.upper_whisker = *std::find_if(s.rbegin(), s.rend(), [&](double v) { return v <= hi_fence; });
  for (double v : s) {
    if (v < b.lower_whisker || v > b.upper_whisker) b.outliers.push_back(v);
  }
  return b;
}

}  // namespace swunet
