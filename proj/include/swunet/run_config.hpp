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
#include <optional>
#include <string>
#include <string_view>

#include "swunet/network.hpp"
#include "swunet/trainer.hpp"

namespace swunet {

/// Everything one command needs. The network comes either from a named
/// preset (optionally with its base filters replaced) or from explicit
/// switches, never both.
struct RunConfig {
  std::optional<std::string> model;
  SwitchConfig network;
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  TrainRun trainer;

  /// Throws ConfigError; `need_data` additionally requires an existing
  /// manifest and an output directory.
  void validate(bool need_data) const;
};

/// Relative paths are resolved against `base_dir`. Unknown keys and type
/// mismatches are ConfigErrors.
RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolved configuration as JSON; parses back to an equal RunConfig.
std::string run_config_json(const RunConfig& cfg);

}  // namespace swunet
