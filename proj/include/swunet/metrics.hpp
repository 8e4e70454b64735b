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

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace swunet {

/// Label grid, one byte per pixel in row-major order.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}
  std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Mask&) const = default;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricsReport {
  double accuracy = 0;
  double specificity = 0;
  double precision = 0;
  double recall = 0;
  double dice = 0;
};

inline constexpr int kMetricCount = 5;
const std::vector<std::string>& metric_names();
double metric_value(const MetricsReport& r, int index);

/// Foreground (label 1) is the positive class. Masks must be binary.
ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt);

/// Ratios with the convention 0/0 = 1.
MetricsReport metrics(const ConfusionCounts& c);

struct CategorizedReport {
  MetricsReport report;
  int category = 0;  // 1..10
};

struct CategoryTable {
  std::map<int, MetricsReport> per_category;  // unweighted means
  std::map<int, std::size_t> image_counts;
  MetricsReport overall;
  std::size_t images = 0;
};

CategoryTable aggregate_by_category(std::span<const CategorizedReport> items);

struct BoxplotStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  double mean = 0;
  double lower_whisker = 0;
  double upper_whisker = 0;
  std::vector<double> outliers;  // ascending
};

/// Quartiles by linear interpolation between order statistics; whiskers are
/// the most extreme data points within 1.5 IQR of the box.
BoxplotStats boxplot_stats(std::span<const double> values);

}  // namespace swunet
