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

#include "swunet/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "swunet/errors.hpp"

namespace swunet {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename V>
void read(const json& obj, const char* key, V& dst, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<V, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_arithmetic_v<V>) {
      if (!it->is_number()) throw ConfigError("");
      if constexpr (std::is_integral_v<V>) {
        if (!it->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<V>) {
          if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
        }
      }
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    }
    dst = it->get<V>();
  } catch (const std::exception&) {
    throw ConfigError("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

std::vector<int> read_filters(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("'base_filters' in " + where + " must be an array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError("'base_filters' in " + where + " must hold integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

void RunConfig::validate(bool need_data) const {
  network.validate();
  trainer.validate();
  if (trainer.patch % (1 << (network.depth() - 1)) != 0) {
    throw ConfigError("patch size " + std::to_string(trainer.patch) +
                      " must be divisible by " + std::to_string(1 << (network.depth() - 1)));
  }
  if (need_data) {
    if (manifest.empty()) throw ConfigError("no manifest given");
    if (!std::filesystem::is_regular_file(manifest)) {
      throw NotFoundError("manifest not found: " + manifest.string());
    }
    if (out.empty()) throw ConfigError("no output directory given");
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const std::string top = "config";
  check_keys(j,
             {"model", "base_filters", "switches", "num_classes", "input_channels",
              "manifest", "out", "seed", "loss", "trainer", "patch"},
             top);
  const bool has_model = j.contains("model");
  const bool has_switches = j.contains("switches");
  if (has_model == has_switches) {
    throw ConfigError("config must give exactly one of 'model' and 'switches'");
  }

  RunConfig cfg;
  if (has_model) {
    std::string name;
    read(j, "model", name, top);
    try {
      cfg.network = named_config(name);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    cfg.model = name;
    if (j.contains("base_filters")) cfg.network.base_filters = read_filters(j["base_filters"], top);
  } else {
    if (j.contains("base_filters")) {
      throw ConfigError("'base_filters' belongs inside 'switches' for an explicit network");
    }
    const json& s = j["switches"];
    const std::string where = "switches";
    check_keys(s,
               {"residual", "attention", "filter_doubling", "set1", "set2",
                "recurrence_steps", "base_filters"},
               where);
    read(s, "residual", cfg.network.residual, where);
    read(s, "attention", cfg.network.attention, where);
    read(s, "filter_doubling", cfg.network.filter_doubling, where);
    std::string kind;
    if (s.contains("set1")) {
      read(s, "set1", kind, where);
      cfg.network.set1 = parse_block_kind(kind);
    }
    if (s.contains("set2")) {
      read(s, "set2", kind, where);
      cfg.network.set2 = parse_block_kind(kind);
    }
    read(s, "recurrence_steps", cfg.network.recurrence_steps, where);
    if (!s.contains("base_filters")) throw ConfigError("switches need 'base_filters'");
    cfg.network.base_filters = read_filters(s["base_filters"], where);
  }
  read(j, "num_classes", cfg.network.num_classes, top);
  read(j, "input_channels", cfg.network.input_channels, top);

  std::string path;
  if (j.contains("manifest")) {
    read(j, "manifest", path, top);
    cfg.manifest = resolve(path, base_dir);
  }
  if (j.contains("out")) {
    read(j, "out", path, top);
    cfg.out = resolve(path, base_dir);
  }
  read(j, "seed", cfg.seed, top);
  cfg.trainer.seed = cfg.seed;

  if (j.contains("loss")) {
    const json& l = j["loss"];
    check_keys(l, {"lambda1", "lambda2"}, "loss");
    read(l, "lambda1", cfg.trainer.loss.lambda1, "loss");
    read(l, "lambda2", cfg.trainer.loss.lambda2, "loss");
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    const std::string where = "trainer";
    check_keys(t,
               {"epochs", "batch_size", "lr", "beta1", "beta2", "epsilon", "plateau_factor",
                "plateau_patience", "min_lr", "max_steps"},
               where);
    read(t, "epochs", cfg.trainer.epochs, where);
    read(t, "batch_size", cfg.trainer.batch_size, where);
    read(t, "lr", cfg.trainer.adam.lr, where);
    read(t, "beta1", cfg.trainer.adam.beta1, where);
    read(t, "beta2", cfg.trainer.adam.beta2, where);
    read(t, "epsilon", cfg.trainer.adam.epsilon, where);
    read(t, "plateau_factor", cfg.trainer.plateau_factor, where);
    read(t, "plateau_patience", cfg.trainer.plateau_patience, where);
    read(t, "min_lr", cfg.trainer.min_lr, where);
    read(t, "max_steps", cfg.trainer.max_steps, where);
  }
  if (j.contains("patch")) {
    const json& p = j["patch"];
    check_keys(p, {"size", "overlap"}, "patch");
    read(p, "size", cfg.trainer.patch, "patch");
    read(p, "overlap", cfg.trainer.overlap, "patch");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("config not found: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string run_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  const SwitchConfig& n = cfg.network;
  if (cfg.model) {
    j["model"] = *cfg.model;
    j["base_filters"] = n.base_filters;
  } else {
    j["switches"] = {{"residual", n.residual},
                     {"attention", n.attention},
                     {"filter_doubling", n.filter_doubling},
                     {"set1", std::string(to_string(n.set1))},
                     {"set2", std::string(to_string(n.set2))},
                     {"recurrence_steps", n.recurrence_steps},
                     {"base_filters", n.base_filters}};
  }
  j["num_classes"] = n.num_classes;
  j["input_channels"] = n.input_channels;
  if (!cfg.manifest.empty()) j["manifest"] = cfg.manifest.string();
  if (!cfg.out.empty()) j["out"] = cfg.out.string();
  j["seed"] = cfg.seed;
  j["loss"] = {{"lambda1", cfg.trainer.loss.lambda1}, {"lambda2", cfg.trainer.loss.lambda2}};
  const TrainRun& t = cfg.trainer;
  j["trainer"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"lr", t.adam.lr},
                  {"beta1", t.adam.beta1},
                  {"beta2", t.adam.beta2},
                  {"epsilon", t.adam.epsilon},
                  {"plateau_factor", t.plateau_factor},
                  {"plateau_patience", t.plateau_patience},
                  {"min_lr", t.min_lr},
                  {"max_steps", t.max_steps}};
  j["patch"] = {{"size", t.patch}, {"overlap", t.overlap}};
  return j.dump(2) + "\n";
}

}  // namespace swunet
