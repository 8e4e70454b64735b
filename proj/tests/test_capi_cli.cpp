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

#include <sys/wait.h>

#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "swunet.h"
#include "swunet/checkpoint.hpp"
#include "swunet/image_io.hpp"
#include "swunet/network.hpp"
#include "swunet/patches.hpp"

using namespace swunet;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SWUNET_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Last "total" row of a params report.
long long total_of(const std::string& report) {
  const auto pos = report.find("\ntotal\t\t");
  REQUIRE(pos != std::string::npos);
  return std::stoll(report.substr(pos + 8));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(testing::read_bytes(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

// Small network, small patches: a toy training config.
std::string toy_config(const std::string& manifest, const std::string& out, int epochs) {
  return R"({"model": "s-r2f2u-net", "base_filters": [2, 4, 8, 16, 32],
    "manifest": ")" + manifest + R"(", "out": ")" + out + R"(", "seed": 4,
    "trainer": {"epochs": )" + std::to_string(epochs) + R"(, "batch_size": 2},
    "patch": {"size": 32, "overlap": 4}})";
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

}  // namespace

TEST_CASE("c api status codes and messages") {
  swu_network* net = nullptr;
  CHECK(swu_network_from_model("nope", 0, &net) == SWU_E_ARGUMENT);
  CHECK(net == nullptr);
  CHECK(std::string(swu_last_error()).find("nope") != std::string::npos);
  CHECK(swu_network_from_model(nullptr, 0, &net) == SWU_E_ARGUMENT);
  CHECK(swu_network_from_config("{", nullptr, &net) == SWU_E_CONFIG);
  CHECK(std::string(swu_model_names()).find("s-r2f2u-net\n") != std::string::npos);
  CHECK(std::string(swu_status_name(SWU_E_CHECKPOINT)) == "checkpoint error");
}

TEST_CASE("c api network lifecycle") {
  testing::TempDir dir("capi");
  swu_network* net = nullptr;
  REQUIRE(swu_network_from_config(R"({"model": "s-r2f2-attn-u-net", "base_filters": [2, 4, 8]})",
                                  nullptr, &net) == SWU_OK);
  uint64_t count = 0;
  CHECK(swu_network_param_count(net, &count) == SWU_OK);
  CHECK(count > 0);
  int depth = 0, classes = 0;
  swu_network_depth(net, &depth);
  swu_network_num_classes(net, &classes);
  CHECK(depth == 3);
  CHECK(classes == 2);
  char* text = nullptr;
  REQUIRE(swu_network_summary(net, 64, 64, &text) == SWU_OK);
  CHECK(std::string(text).find("dec0.gate") != std::string::npos);
  swu_free_string(text);

  std::vector<float> x(2 * 16 * 16, 0.25f), y(2 * 2 * 16 * 16);
  CHECK(swu_network_forward(net, x.data(), 2, 1, 16, 16, y.data(), y.size()) == SWU_OK);
  CHECK(y[0] + y[256] == doctest::Approx(1.0f));
  CHECK(swu_network_forward(net, x.data(), 2, 1, 16, 16, y.data(), 3) == SWU_E_SHAPE);
  CHECK(swu_network_forward(net, x.data(), 1, 1, 10, 10, y.data(), y.size()) == SWU_E_SHAPE);

  const std::string ckpt = (dir.path / "n.ckpt").string();
  CHECK(swu_network_save(net, ckpt.c_str()) == SWU_OK);
  swu_network* other = nullptr;
  REQUIRE(swu_network_from_model("s-r2f2u-net", 0, &other) == SWU_OK);
  CHECK(swu_network_load(other, ckpt.c_str()) == SWU_E_CHECKPOINT);
  CHECK(std::string(swu_last_error()).find("enc") != std::string::npos);
  CHECK(swu_network_load(net, (dir.path / "none.ckpt").string().c_str()) == SWU_E_NOT_FOUND);
  CHECK(swu_network_load(net, ckpt.c_str()) == SWU_OK);
  swu_network_destroy(other);
  swu_network_destroy(net);
}

TEST_CASE("cli params") {
  const auto r = run("params --model s-r2f2u-net");
  REQUIRE(r.code == 0);
  const long long total = total_of(r.output);
  CHECK(std::abs(total - 59.12e6) <= 0.05 * 59.12e6);
  std::istringstream lines(r.output);
  std::string line;
  std::getline(lines, line);
  long long sum = 0;
  while (std::getline(lines, line) && line.rfind("total", 0) != 0) {
    sum += std::stoll(line.substr(line.rfind('\t') + 1));
  }
  CHECK(sum == total);
  CHECK(r.output.find("total_millions\t\t61.39") != std::string::npos);
  const auto big = run("params --model r2u-net");
  REQUIRE(big.code == 0);
  CHECK(total_of(big.output) >= 1.4 * total);
  const auto bad = run("params --model nothing");
  CHECK(bad.code != 0);
  CHECK(bad.output.find("nothing") != std::string::npos);
  CHECK(run("params").code != 0);
}

TEST_CASE("cli help lists flags with defaults") {
  for (const char* cmd : {"train", "predict", "evaluate", "params", "features"}) {
    CAPTURE(cmd);
    const auto r = run(std::string(cmd) + " --help");
    CHECK(r.code == 0);
    for (const char* flag : {"--config", "--model", "--seed", "--out"}) {
      CHECK(r.output.find(flag) != std::string::npos);
    }
    CHECK(r.output.find("[0]") != std::string::npos);
  }
  CHECK(run("evaluate --help").output.find("[test]") != std::string::npos);
}

// Trains once; the subcases below reuse the run.
struct TrainedRun {
  testing::TempDir dir{"cli"};
  Result first, second;
  TrainedRun() {
    testing::make_blob_dataset(dir.path / "data", 6, 40, 36, 8,
                               {Split::kTrain, Split::kTrain, Split::kVal, Split::kTest});
    write_text(dir.path / "cfg.json", toy_config("data/manifest.csv", "run", 2));
    first = run("train --config " + q(dir.path / "cfg.json"));
    second = run("train --config " + q(dir.path / "cfg.json") + " --out " + q(dir.path / "run2"));
  }
};

const TrainedRun& trained() {
  static const TrainedRun r;
  return r;
}

TEST_CASE("cli train writes a reproducible run") {
  const auto& t = trained();
  const auto& dir = t.dir;
  INFO(t.first.output);
  REQUIRE(t.first.code == 0);
  for (const char* f : {"config.json", "train_log.csv", "last.ckpt", "best.ckpt"}) {
    CHECK(fs::exists(dir.path / "run" / f));
  }
  const auto log = read_csv(dir.path / "run" / "train_log.csv");
  CHECK(log.size() == 3);
  CHECK(log[0] == std::vector<std::string>{"epoch", "train_loss", "val_loss", "val_dice", "lr"});
  REQUIRE(t.second.code == 0);
  CHECK(testing::read_bytes(dir.path / "run" / "train_log.csv") ==
        testing::read_bytes(dir.path / "run2" / "train_log.csv"));
  CHECK(testing::read_bytes(dir.path / "run" / "last.ckpt") ==
        testing::read_bytes(dir.path / "run2" / "last.ckpt"));
}

TEST_CASE("cli predict, evaluate and features") {
  const auto& t = trained();
  const auto& dir = t.dir;
  REQUIRE(t.first.code == 0);
  const auto ckpt = dir.path / "run" / "best.ckpt";

  SUBCASE("predict keeps the input size and is repeatable") {
    GrayImage pano(1991, 1127);
    std::mt19937_64 gen(1);
    for (auto& v : pano.pixels) v = static_cast<std::uint8_t>(gen() & 0xff);
    fs::create_directories(dir.path / "in");
    write_png(dir.path / "in" / "pano.png", pano);
    const auto p = run("predict --checkpoint " + q(ckpt) + " --input " + q(dir.path / "in") +
                       " --out " + q(dir.path / "pred") + " --patch 512 --overlap 10");
    INFO(p.output);
    REQUIRE(p.code == 0);
    const auto mask = read_png(dir.path / "pred" / "pano.png");
    CHECK(mask.width == 1991);
    CHECK(mask.height == 1127);
    for (auto v : mask.pixels) {
      if (v != 0 && v != 255) FAIL("mask value " << int(v));
    }
    const auto bytes = testing::read_bytes(dir.path / "pred" / "pano.png");
    REQUIRE(run("predict --checkpoint " + q(ckpt) + " --input " + q(dir.path / "in" / "pano.png") +
                " --out " + q(dir.path / "pred2") + " --patch 512 --overlap 10")
                .code == 0);
    CHECK(testing::read_bytes(dir.path / "pred2" / "pano.png") == bytes);
  }

  SUBCASE("predict with a mismatched model fails before writing") {
    const auto p = run("predict --checkpoint " + q(ckpt) + " --model s-r2u-net --input " +
                       q(dir.path / "data" / "img" / "s0.png") + " --out " + q(dir.path / "nope"));
    CHECK(p.code != 0);
    CHECK(p.output.find("checkpoint") != std::string::npos);
    CHECK(p.output.find("enc0.") != std::string::npos);
    CHECK(!fs::exists(dir.path / "nope"));
  }

  SUBCASE("evaluate writes consistent reports") {
    const auto e = run("evaluate --checkpoint " + q(ckpt) + " --manifest " +
                       q(dir.path / "data" / "manifest.csv") + " --split train --out " +
                       q(dir.path / "eval"));
    INFO(e.output);
    REQUIRE(e.code == 0);
    const auto per = read_csv(dir.path / "eval" / "per_image.csv");
    REQUIRE(per.size() == 5);  // header + 4 training images
    std::set<std::string> cats;
    double dice = 0;
    for (std::size_t i = 1; i < per.size(); ++i) {
      cats.insert(per[i][1]);
      dice += std::stod(per[i][6]);
    }
    const auto table = read_csv(dir.path / "eval" / "categories.csv");
    CHECK(table[0].size() == cats.size() + 1);
    const auto summary = read_csv(dir.path / "eval" / "summary.csv");
    CHECK(summary[0] == std::vector<std::string>{"accuracy", "specificity", "precision", "recall", "dice"});
    CHECK(std::stod(summary[1][4]) == doctest::Approx(dice / 4).epsilon(1e-5));
    CHECK(fs::exists(dir.path / "eval" / "boxplot.json"));
    CHECK(run("evaluate --checkpoint " + q(ckpt) + " --manifest " + q(dir.path / "missing.csv") +
              " --out " + q(dir.path / "eval2"))
              .code != 0);
  }

  SUBCASE("features emit one map per decoder level") {
    const auto f = run("features --checkpoint " + q(ckpt) + " --input " +
                       q(dir.path / "data" / "img" / "s1.png") + " --out " + q(dir.path / "feat"));
    INFO(f.output);
    REQUIRE(f.code == 0);
    for (int level = 0; level < 4; ++level) {
      const auto img = read_png(dir.path / "feat" / ("decoder-" + std::to_string(level) + ".png"));
      CHECK(img.width == 40);
      CHECK(img.height == 36);
    }
    CHECK(!fs::exists(dir.path / "feat" / "decoder-4.png"));
  }
}

TEST_CASE("features of a constant map are black") {
  testing::TempDir dir("flat");
  // zero every weight: each decoder stage then outputs a constant map
  const std::string ckpt = (dir.path / "zero.ckpt").string();
  SwitchConfig c = named_config("s-r2u-net");
  c.base_filters = {2, 4};
  auto zero = Network<float>::build(c, 0);
  for (const auto& p : zero.store().entries()) {
    if (p->trainable) p->value.fill(0.0f);
  }
  save_weights(zero.store(), ckpt);
  swu_network* net = nullptr;
  REQUIRE(swu_network_from_config(R"({"model": "s-r2u-net", "base_filters": [2, 4]})", nullptr, &net) == SWU_OK);
  REQUIRE(swu_network_load(net, ckpt.c_str()) == SWU_OK);
  GrayImage img(20, 12);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
  write_png(dir.path / "x.png", img);
  int written = 0;
  REQUIRE(swu_export_features(net, (dir.path / "x.png").string().c_str(),
                              (dir.path / "f").string().c_str(), 16, 4, &written) == SWU_OK);
  CHECK(written == 1);
  const auto f = read_png(dir.path / "f" / "decoder-0.png");
  CHECK(f == GrayImage(20, 12, 0));
  swu_network_destroy(net);
}

TEST_CASE("cli train failures") {
  testing::TempDir dir("cli-bad");
  write_text(dir.path / "cfg.json", toy_config("does/not/exist.csv", "run", 1));
  const auto r = run("train --config " + q(dir.path / "cfg.json"));
  CHECK(r.code != 0);
  CHECK(r.output.find("does/not/exist.csv") != std::string::npos);
  CHECK(!fs::exists(dir.path / "run"));
  write_text(dir.path / "both.json", R"({"model": "r2u-net", "switches": {"base_filters": [2]}})");
  CHECK(run("train --config " + q(dir.path / "both.json")).code != 0);
  CHECK(run("train --config " + q(dir.path / "absent.json")).code != 0);
}
