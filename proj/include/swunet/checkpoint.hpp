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
#include <filesystem>
#include <string>
#include <vector>

#include "swunet/params.hpp"

namespace swunet {

// Little-endian layout:
//   magic "SWUCKPT1" | u32 version | u32 entry count | u64 trainable count
//   per entry: u32 name length | name bytes | u32 rank | rank x u32 dims |
//              float32 payload
inline constexpr char kCheckpointMagic[8] = {'S', 'W', 'U', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

struct CheckpointFile {
  std::uint32_t version = 0;
  std::uint64_t trainable_count = 0;
  std::vector<CheckpointEntry> entries;
};

CheckpointFile read_checkpoint(const std::filesystem::path& path);

/// Writes every entry of the store, trainable or not, in registry order.
template <typename T>
void save_weights(const ParameterStore<T>& store, const std::filesystem::path& path);

/// All-or-nothing: the store is untouched unless every name and shape
/// matches. Throws CheckpointError naming the first offending entry.
template <typename T>
void load_weights(ParameterStore<T>& store, const std::filesystem::path& path);

}  // namespace swunet
