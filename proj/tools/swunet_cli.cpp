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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swunet.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  int code;
  std::string message;
};

void check(swu_status s) {
  if (s != SWU_OK) {
    throw Failure{static_cast<int>(s), std::string(swu_status_name(s)) + ": " + swu_last_error()};
  }
}

[[noreturn]] void fail(const std::string& message, int code = 1) { throw Failure{code, message}; }

struct Options {
  std::string config;
  std::string model;
  std::string out;
  std::string checkpoint;
  std::string manifest;
  std::string split = "test";
  std::string input;
  uint64_t seed = 0;
  bool seed_set = false;
  int patch = 0;  // 0: from config or 512
  int overlap = -1;
  int height = 512;
  int width = 512;
};

struct ResolvedConfig {
  json doc;
  std::string base_dir;
};

json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("config not found: " + path.string(), SWU_E_NOT_FOUND);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    fail("config error: " + path.string() + ": " + e.what(), SWU_E_CONFIG);
  }
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// Config file (explicit, or config.json beside the checkpoint) with the
// command-line flags applied on top.
ResolvedConfig resolve(const Options& o, bool fallback_to_checkpoint) {
  ResolvedConfig r;
  r.doc = json::object();
  fs::path source;
  if (!o.config.empty()) {
    source = o.config;
  } else if (o.model.empty() && fallback_to_checkpoint && !o.checkpoint.empty()) {
    const fs::path beside = fs::path(o.checkpoint).parent_path() / "config.json";
    if (fs::exists(beside)) source = beside;
  }
  if (!source.empty()) {
    r.doc = read_json(source);
    if (!r.doc.is_object()) fail("config error: " + source.string() + " is not an object", SWU_E_CONFIG);
    r.base_dir = fs::absolute(source).parent_path().string();
  }
  if (!o.model.empty()) {
    r.doc.erase("switches");
    r.doc.erase("base_filters");
    r.doc["model"] = o.model;
  }
  if (!r.doc.contains("model") && !r.doc.contains("switches")) {
    fail("no network given: pass --model or --config", SWU_E_CONFIG);
  }
  if (o.seed_set) r.doc["seed"] = o.seed;
  if (!o.out.empty()) r.doc["out"] = absolute(o.out);
  if (!o.manifest.empty()) r.doc["manifest"] = absolute(o.manifest);
  if (o.patch > 0) r.doc["patch"]["size"] = o.patch;
  if (o.overlap >= 0) r.doc["patch"]["overlap"] = o.overlap;
  return r;
}

std::pair<int, int> patch_settings(const ResolvedConfig& r) {
  int patch = 512, overlap = 10;
  if (r.doc.contains("patch") && r.doc["patch"].is_object()) {
    const auto& p = r.doc["patch"];
    if (p.contains("size") && p["size"].is_number_integer()) patch = p["size"].get<int>();
    if (p.contains("overlap") && p["overlap"].is_number_integer()) overlap = p["overlap"].get<int>();
  }
  return {patch, overlap};
}

using NetPtr = std::unique_ptr<swu_network, decltype(&swu_network_destroy)>;

NetPtr build(const ResolvedConfig& r) {
  swu_network* raw = nullptr;
  const std::string text = r.doc.dump();
  check(swu_network_from_config(text.c_str(), r.base_dir.empty() ? nullptr : r.base_dir.c_str(), &raw));
  return NetPtr(raw, &swu_network_destroy);
}

NetPtr build_with_checkpoint(const Options& o, const ResolvedConfig& r) {
  if (o.checkpoint.empty()) fail("--checkpoint is required", SWU_E_ARGUMENT);
  NetPtr net = build(r);
  check(swu_network_load(net.get(), o.checkpoint.c_str()));
  return net;
}

int cmd_params(const Options& o) {
  const ResolvedConfig r = resolve(o, false);
  NetPtr net = build(r);
  char* text = nullptr;
  check(swu_network_summary(net.get(), o.height, o.width, &text));
  std::fputs(text, stdout);
  swu_free_string(text);
  return 0;
}

void print_epoch(int epoch, double train_loss, double val_loss, double val_dice, double lr,
                 void*) {
  std::fprintf(stderr, "epoch %d  train_loss %.6f  val_loss %.6f  val_dice %.6f  lr %.3g\n",
               epoch, train_loss, val_loss, val_dice, lr);
}

int cmd_train(const Options& o) {
  if (o.config.empty() && o.model.empty()) fail("--config or --model is required", SWU_E_CONFIG);
  const ResolvedConfig r = resolve(o, false);
  const std::string text = r.doc.dump();
  const char* base = r.base_dir.empty() ? nullptr : r.base_dir.c_str();
  check(swu_validate_config(text.c_str(), base, 1));
  check(swu_train(text.c_str(), base, &print_epoch, nullptr));
  return 0;
}

std::vector<fs::path> list_inputs(const std::string& input) {
  if (input.empty()) fail("--input is required", SWU_E_ARGUMENT);
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail("no .png files in " + input, SWU_E_NOT_FOUND);
  } else if (fs::is_regular_file(input)) {
    files.emplace_back(input);
  } else {
    fail("input not found: " + input, SWU_E_NOT_FOUND);
  }
  return files;
}

int cmd_predict(const Options& o) {
  if (o.out.empty()) fail("--out is required", SWU_E_ARGUMENT);
  const ResolvedConfig r = resolve(o, true);
  const auto [patch, overlap] = patch_settings(r);
  NetPtr net = build_with_checkpoint(o, r);
  const auto files = list_inputs(o.input);
  fs::create_directories(o.out);
  for (const auto& f : files) {
    const std::string dst = (fs::path(o.out) / f.filename()).string();
    check(swu_predict_png(net.get(), f.string().c_str(), dst.c_str(), patch, overlap));
    std::printf("%s\n", dst.c_str());
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.out.empty()) fail("--out is required", SWU_E_ARGUMENT);
  const ResolvedConfig r = resolve(o, true);
  const auto [patch, overlap] = patch_settings(r);
  if (!r.doc.contains("manifest") || !r.doc["manifest"].is_string()) {
    fail("--manifest is required", SWU_E_ARGUMENT);
  }
  fs::path manifest = r.doc["manifest"].get<std::string>();
  if (manifest.is_relative() && !r.base_dir.empty()) manifest = fs::path(r.base_dir) / manifest;
  NetPtr net = build_with_checkpoint(o, r);
  check(swu_evaluate(net.get(), manifest.string().c_str(), o.split.c_str(), o.out.c_str(), patch,
                     overlap));
  std::ifstream summary(fs::path(o.out) / "summary.csv");
  std::cout << summary.rdbuf();
  return 0;
}

int cmd_features(const Options& o) {
  if (o.out.empty()) fail("--out is required", SWU_E_ARGUMENT);
  const ResolvedConfig r = resolve(o, true);
  const auto [patch, overlap] = patch_settings(r);
  NetPtr net = build_with_checkpoint(o, r);
  if (!fs::is_regular_file(o.input)) fail("input not found: " + o.input, SWU_E_NOT_FOUND);
  int written = 0;
  check(swu_export_features(net.get(), o.input.c_str(), o.out.c_str(), patch, overlap, &written));
  std::printf("%d feature maps written to %s\n", written, o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switch-configured encoder-decoder segmentation networks"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Options o;

  auto add_shared = [&](CLI::App* cmd) {
    cmd->option_defaults()->always_capture_default();
    cmd->add_option("--config", o.config, "Run config (JSON)");
    cmd->add_option("--model", o.model, "Preset name, overrides the config network");
    cmd->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--out", o.out, "Output directory");
  };
  auto add_patch = [&](CLI::App* cmd) {
    cmd->add_option("--patch", o.patch, "Patch size (0: config value or 512)");
    cmd->add_option("--overlap", o.overlap, "Patch overlap (-1: config value or 10)");
  };

  auto* train = app.add_subcommand("train", "Train a network from a run config");
  add_shared(train);
  train->add_option("--manifest", o.manifest, "Dataset manifest");
  add_patch(train);

  auto* predict = app.add_subcommand("predict", "Write {0,255} masks for images");
  add_shared(predict);
  predict->add_option("--checkpoint", o.checkpoint, "Weights file")->required();
  predict->add_option("--input", o.input, "Image or directory of PNGs")->required();
  add_patch(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Score one split of a manifest");
  add_shared(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "Weights file")->required();
  evaluate->add_option("--manifest", o.manifest, "Dataset manifest");
  evaluate->add_option("--split", o.split, "train | val | test");
  add_patch(evaluate);

  auto* params = app.add_subcommand("params", "Per-layer parameter report");
  add_shared(params);
  params->add_option("--height", o.height, "Input height for output shapes");
  params->add_option("--width", o.width, "Input width for output shapes");

  auto* features = app.add_subcommand("features", "Export decoder feature maps");
  add_shared(features);
  features->add_option("--checkpoint", o.checkpoint, "Weights file")->required();
  features->add_option("--input", o.input, "Input image")->required();
  add_patch(features);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(o);
    if (*predict) return cmd_predict(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*params) return cmd_params(o);
    if (*features) return cmd_features(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "swunet: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "swunet: %s\n", e.what());
    return 1;
  }
  return 1;
}
