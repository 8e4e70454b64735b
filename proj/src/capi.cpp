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

#include "swunet.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "swunet/checkpoint.hpp"
#include "swunet/errors.hpp"
#include "swunet/image_io.hpp"
#include "swunet/manifest.hpp"
#include "swunet/network.hpp"
#include "swunet/patches.hpp"
#include "swunet/run_config.hpp"
#include "swunet/trainer.hpp"

struct swu_network {
  swunet::Network<float> net;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
swu_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SWU_OK;
  } catch (const swunet::Error& e) {
    g_last_error = e.what();
    return static_cast<swu_status>(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return SWU_E_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return SWU_E_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw swunet::ArgumentError(std::string(what) + " must not be NULL");
}

std::filesystem::path base_path(const char* base_dir) {
  return base_dir ? std::filesystem::path(base_dir) : std::filesystem::path();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw swunet::IoError("cannot write " + path.string());
  f << text;
  if (!f) throw swunet::IoError("failed writing " + path.string());
}

swunet::Tensor<float> load_input(const swunet::Network<float>& net, const char* path) {
  if (net.config().input_channels != 1) {
    throw swunet::ConfigError("PNG input needs a single-channel network");
  }
  return swunet::normalize<float>(swunet::read_png(path));
}

// Channel mean of a (1,c,h,w) map, nearest-upsampled to size x size.
swunet::Tensor<float> mean_map(const swunet::Tensor<float>& t, int size) {
  const int f = size / t.h();
  swunet::Tensor<float> out(1, 1, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double s = 0;
      for (int c = 0; c < t.c(); ++c) s += t.at(0, c, y / f, x / f);
      out.at(0, 0, y, x) = static_cast<float>(s / t.c());
    }
  }
  return out;
}

swunet::GrayImage scale_to_gray(const swunet::Tensor<float>& map) {
  const auto d = map.data();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  swunet::GrayImage img(map.w(), map.h());
  const double range = static_cast<double>(*hi) - *lo;
  if (!(range > 0)) return img;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = (d[i] - *lo) / range * 255.0;
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
  }
  return img;
}

}  // namespace

extern "C" {

const char* swu_last_error(void) { return g_last_error.c_str(); }

const char* swu_status_name(swu_status status) {
  switch (status) {
    case SWU_OK: return "ok";
    case SWU_E_ARGUMENT: return "argument error";
    case SWU_E_SHAPE: return "shape error";
    case SWU_E_CONFIG: return "config error";
    case SWU_E_CHECKPOINT: return "checkpoint error";
    case SWU_E_DATA: return "data error";
    case SWU_E_NOT_FOUND: return "not found";
    case SWU_E_IO: return "i/o error";
    case SWU_E_NUMERIC: return "numeric error";
    case SWU_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* swu_model_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : swunet::model_names()) s += n + "\n";
    return s;
  }();
  return names.c_str();
}

swu_status swu_network_from_model(const char* name, uint64_t seed, swu_network** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = nullptr;
    auto cfg = swunet::named_config(name);
    *out = new swu_network{swunet::Network<float>::build(cfg, seed)};
  });
}

swu_status swu_network_from_config(const char* json, const char* base_dir,
                                   swu_network** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = nullptr;
    const auto cfg = swunet::parse_run_config(json, base_path(base_dir));
    cfg.validate(false);
    *out = new swu_network{swunet::Network<float>::build(cfg.network, cfg.seed)};
  });
}

void swu_network_destroy(swu_network* net) { delete net; }

swu_status swu_network_param_count(const swu_network* net, uint64_t* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = net->net.parameter_count();
  });
}

swu_status swu_network_depth(const swu_network* net, int* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = net->net.config().depth();
  });
}

swu_status swu_network_num_classes(const swu_network* net, int* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = net->net.config().num_classes;
  });
}

swu_status swu_network_summary(const swu_network* net, int h, int w, char** text) {
  return guarded([&] {
    require(net, "net");
    require(text, "text");
    *text = nullptr;
    const std::string s = swunet::format_summary(net->net.summary(h, w));
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *text = buf;
  });
}

void swu_free_string(char* text) { delete[] text; }

swu_status swu_network_save(const swu_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    swunet::save_weights(net->net.store(), path);
  });
}

swu_status swu_network_load(swu_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    swunet::load_weights(net->net.store(), path);
  });
}

swu_status swu_network_forward(swu_network* net, const float* input, int n, int c, int h,
                               int w, float* output, size_t output_len) {
  return guarded([&] {
    require(net, "net");
    require(input, "input");
    require(output, "output");
    swunet::Shape shape{n, c, h, w};
    swunet::Tensor<float> x(shape);
    std::copy_n(input, x.size(), x.raw());
    const auto y = net->net.predict(x);
    if (output_len != y.size()) {
      throw swunet::ShapeError("output buffer holds " + std::to_string(output_len) +
                               " values, result has " + std::to_string(y.size()));
    }
    std::copy_n(y.raw(), y.size(), output);
  });
}

swu_status swu_predict_png(swu_network* net, const char* image_path, const char* out_path,
                           int patch, int overlap) {
  return guarded([&] {
    require(net, "net");
    require(image_path, "image_path");
    require(out_path, "out_path");
    const auto image = load_input(net->net, image_path);
    const auto mask = swunet::predict_mask(net->net, image, patch, overlap);
    swunet::write_png(out_path, swunet::mask_to_image(mask));
  });
}

swu_status swu_export_features(swu_network* net, const char* image_path, const char* out_dir,
                               int patch, int overlap, int* written) {
  return guarded([&] {
    require(net, "net");
    require(image_path, "image_path");
    require(out_dir, "out_dir");
    if (written) *written = 0;
    const auto& cfg = net->net.config();
    if (patch % (1 << (cfg.depth() - 1)) != 0) {
      throw swunet::ArgumentError("patch size must be divisible by " +
                                  std::to_string(1 << (cfg.depth() - 1)));
    }
    const auto image = load_input(net->net, image_path);
    const auto grid = swunet::plan_patches(image.w(), image.h(), patch, overlap);
    const std::size_t levels = net->net.decoder().size();
    std::vector<std::vector<swunet::Tensor<float>>> maps(levels);
    for (const auto& p : swunet::extract_patches(image, grid)) {
      std::vector<swunet::Tensor<float>> taps;
      net->net.predict(p, &taps);
      for (std::size_t l = 0; l < levels; ++l) maps[l].push_back(mean_map(taps[l], patch));
    }
    std::vector<swunet::GrayImage> images;
    for (std::size_t l = 0; l < levels; ++l) {
      images.push_back(scale_to_gray(swunet::stitch<float>(maps[l], grid)));
    }
    std::filesystem::create_directories(out_dir);
    for (std::size_t l = 0; l < levels; ++l) {
      const int level = net->net.decoder()[l].plan.level;
      swunet::write_png(std::filesystem::path(out_dir) /
                            ("decoder-" + std::to_string(level) + ".png"),
                        images[l]);
      if (written) ++*written;
    }
  });
}

swu_status swu_evaluate(swu_network* net, const char* manifest_path, const char* split,
                        const char* out_dir, int patch, int overlap) {
  return guarded([&] {
    require(net, "net");
    require(manifest_path, "manifest_path");
    require(split, "split");
    require(out_dir, "out_dir");
    const auto which = swunet::parse_split(split);
    const auto manifest = swunet::load_manifest(manifest_path);
    const auto samples = swunet::load_samples(manifest, which);
    if (samples.empty()) {
      throw swunet::DataError("split '" + std::string(split) + "' of " +
                              std::string(manifest_path) + " is empty");
    }
    const auto ev = swunet::evaluate(net->net, samples, patch, overlap);
    swunet::write_evaluation(ev, out_dir);
  });
}

swu_status swu_validate_config(const char* json, const char* base_dir, int need_data) {
  return guarded([&] {
    require(json, "json");
    swunet::parse_run_config(json, base_path(base_dir)).validate(need_data != 0);
  });
}

swu_status swu_train(const char* json, const char* base_dir, swu_epoch_fn on_epoch,
                     void* user) {
  return guarded([&] {
    require(json, "json");
    auto cfg = swunet::parse_run_config(json, base_path(base_dir));
    cfg.validate(true);
    const auto manifest = swunet::load_manifest(cfg.manifest);
    const auto train_set = swunet::load_samples(manifest, swunet::Split::kTrain);
    const auto val_set = swunet::load_samples(manifest, swunet::Split::kVal);
    if (train_set.empty()) throw swunet::DataError("manifest has no train records");
    if (val_set.empty()) throw swunet::DataError("manifest has no val records");

    std::filesystem::create_directories(cfg.out);
    cfg.trainer.checkpoint_dir = cfg.out;
    write_text(cfg.out / "config.json", swunet::run_config_json(cfg));
    auto net = swunet::Network<float>::build(cfg.network, cfg.seed);
    std::vector<swunet::EpochLog> log;
    const auto log_path = cfg.out / "train_log.csv";
    swunet::train(net, train_set, val_set, cfg.trainer, [&](const swunet::EpochLog& row) {
      log.push_back(row);
      write_text(log_path, swunet::format_log(log));
      if (on_epoch) on_epoch(row.epoch, row.train_loss, row.val_loss, row.val_dice, row.lr, user);
    });
  });
}

}  // extern "C"
