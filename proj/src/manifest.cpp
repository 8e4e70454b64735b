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

#include "swunet/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "swunet/errors.hpp"

namespace swunet {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ArgumentError("split must be train, val or test, got '" + std::string(text) + "'");
}

const std::vector<CategoryInfo>& benchmark_categories() {
  //                                    missing restor. appl.  implant images teeth
  static const std::vector<CategoryInfo> table = {
      {1, false, true, true, false, 73, 32},
      {2, false, true, false, false, 220, 32},
      {3, false, false, true, false, 45, 32},
      {4, false, false, false, false, 140, 32},
      {5, true, false, false, true, 120, 18},
      {6, false, false, false, false, 170, 37},
      {7, true, true, true, false, 115, 27},
      {8, true, true, false, false, 457, 29},
      {9, true, false, true, false, 45, 28},
      {10, true, false, false, false, 115, 28},
  };
  return table;
}

std::vector<ManifestRecord> DatasetManifest::split(Split s) const {
  std::vector<ManifestRecord> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw NotFoundError("manifest '" + path.string() + "' not found");
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  m.source = path;
  const auto base = path.parent_path();
  const std::string where = path.string() + ":";
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"image", "mask", "category", "split"}) {
        throw DataError(where + std::to_string(lineno) +
                        ": expected header 'image,mask,category,split'");
      }
      header_seen = true;
      continue;
    }
    const auto fail = [&](const std::string& msg) {
      throw DataError(where + std::to_string(lineno) + ": " + msg);
    };
    if (fields.size() != 4) fail("expected 4 fields, found " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) fail("empty path");
    ManifestRecord r;
    r.line = lineno;
    r.image = std::filesystem::path(fields[0]).is_absolute() ? std::filesystem::path(fields[0]) : base / fields[0];
    r.mask = std::filesystem::path(fields[1]).is_absolute() ? std::filesystem::path(fields[1]) : base / fields[1];
    int cat = 0;
    const auto& cs = fields[2];
    auto [ptr, ec] = std::from_chars(cs.data(), cs.data() + cs.size(), cat);
    if (ec != std::errc() || ptr != cs.data() + cs.size()) fail("category '" + cs + "' is not an integer");
    if (cat < 1 || cat > 10) fail("category " + cs + " outside 1..10");
    r.category = cat;
    try {
      r.split = parse_split(fields[3]);
    } catch (const ArgumentError&) {
      fail("split '" + fields[3] + "' is not train, val or test");
    }
    if (!seen.insert(r.image.lexically_normal().string()).second) {
      fail("duplicate image path '" + fields[0] + "'");
    }
    m.records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError(where + " empty manifest");
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  const auto base = path.parent_path();
  const auto rel = [&](const std::filesystem::path& p) {
    auto r = p.lexically_relative(base.empty() ? std::filesystem::path(".") : base);
    return (r.empty() || r.native().starts_with("..")) ? p.string() : r.string();
  };
  out << "image,mask,category,split\n";
  for (const auto& r : records) {
    out << rel(r.image) << ',' << rel(r.mask) << ',' << r.category << ','
        << to_string(r.split) << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

SplitReport split_check(const DatasetManifest& manifest) {
  SplitReport rep;
  for (const auto& r : manifest.records) ++rep.counts[static_cast<int>(r.split)];
  const double total = static_cast<double>(manifest.records.size());
  for (int i = 0; i < 3; ++i) {
    rep.percent[i] = total > 0 ? 100.0 * static_cast<double>(rep.counts[i]) / total : 0.0;
    rep.flagged[i] = std::abs(rep.percent[i] - kTargetSplitPercent[i]) > kSplitTolerancePoints;
  }
  return rep;
}

std::string SplitReport::str() const {
  std::ostringstream out;
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.1f%%\t%s\n", names[i], counts[i], percent[i],
                  flagged[i] ? "FLAG" : "ok");
    out << buf;
  }
  return out.str();
}

}  // namespace swunet
