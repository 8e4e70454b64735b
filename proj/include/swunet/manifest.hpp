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

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace swunet {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// Attribute row of the ten-category panoramic radiograph benchmark.
struct CategoryInfo {
  int id = 0;
  bool missing_teeth = false;
  bool restoration = false;
  bool appliance = false;
  bool implant = false;
  int images = 0;
  int average_teeth = 0;
};

const std::vector<CategoryInfo>& benchmark_categories();

struct ManifestRecord {
  std::filesystem::path image;  // resolved against the manifest directory
  std::filesystem::path mask;
  int category = 0;
  Split split = Split::kTrain;
  int line = 0;
};

/// Parsed `image,mask,category,split` file.
struct DatasetManifest {
  std::filesystem::path source;
  std::vector<ManifestRecord> records;
  std::vector<CategoryInfo> categories = benchmark_categories();

  std::vector<ManifestRecord> split(Split s) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes records with paths relative to the manifest's directory when
/// possible.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records);

/// Per-split counts and percentages against the 60:10:30 target; a split is
/// flagged when it deviates by more than two percentage points.
struct SplitReport {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> percent{};
  std::array<bool, 3> flagged{};
  bool ok() const { return !flagged[0] && !flagged[1] && !flagged[2]; }
  std::string str() const;
};

inline constexpr std::array<double, 3> kTargetSplitPercent = {60.0, 10.0, 30.0};
inline constexpr double kSplitTolerancePoints = 2.0;

SplitReport split_check(const DatasetManifest& manifest);

}  // namespace swunet
