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

// Independent reference implementations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's numeric kernels.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "swunet/autodiff.hpp"
#include "swunet/image_io.hpp"
#include "swunet/manifest.hpp"
#include "swunet/metrics.hpp"
#include "swunet/ops.hpp"
#include "swunet/tensor.hpp"

namespace swunet::testing {

inline Tensor<double> random_tensor(Shape s, std::mt19937_64& gen, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(s);
  for (auto& v : t.data()) v = d(gen);
  return t;
}

template <typename T>
void randomize(Tensor<T>& t, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data()) v = static_cast<T>(d(gen));
}

/// Six nested loops over (n, o, y, x, i, ky, kx); kx is innermost.
inline Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w,
                                  const std::vector<double>& bias, int stride, bool same) {
  const int kh = w.h(), kw = w.w();
  int oh, ow, pt = 0, pl = 0;
  if (same) {
    oh = (x.h() + stride - 1) / stride;
    ow = (x.w() + stride - 1) / stride;
    pt = std::max((oh - 1) * stride + kh - x.h(), 0) / 2;
    pl = std::max((ow - 1) * stride + kw - x.w(), 0) / 2;
  } else {
    oh = (x.h() - kh) / stride + 1;
    ow = (x.w() - kw) / stride + 1;
  }
  Tensor<double> out(x.n(), w.n(), oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < w.n(); ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (int i = 0; i < x.c(); ++i)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int sy = y * stride + ky - pt;
                const int sx = xx * stride + kx - pl;
                if (sy < 0 || sx < 0 || sy >= x.h() || sx >= x.w()) continue;
                acc += x.at(n, i, sy, sx) * w.at(o, i, ky, kx);
              }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

struct GradReport {
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::string worst;
};

/// |a - b| / max(|a|, |b|, floor): relative error, with an absolute floor
/// for entries whose true gradient is (numerically) zero.
inline double rel_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using GraphFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

/// Compares reverse-mode gradients of sum(f(inputs) * R) for a fixed random
/// R against central differences, for every input element and every element
/// of `params`.
inline GradReport check_gradients(const GraphFn& f, std::vector<Tensor<double>> inputs,
                                  const std::vector<Parameter<double>*>& params,
                                  std::uint64_t seed = 7, double h = 1e-5) {
  std::mt19937_64 gen(seed);
  Tensor<double> weights;
  bool have_weights = false;

  auto objective = [&](bool record, std::vector<Var<double>>* leaves) {
    Tape<double> tape(record);
    std::vector<Var<double>> in;
    for (const auto& t : inputs) in.push_back(record ? tape.leaf(t) : tape.constant(t));
    Var<double> out = f(tape, in);
    if (!have_weights) {
      weights = random_tensor(out->value.shape(), gen, 0.5, 1.5);
      have_weights = true;
    }
    double loss = 0;
    for (std::size_t i = 0; i < out->value.size(); ++i) loss += out->value[i] * weights[i];
    if (record) {
      auto l = sum(tape, mul(tape, out, tape.constant(weights)));
      for (auto* p : params) p->zero_grad();
      tape.backward(l);
      *leaves = in;
    }
    return loss;
  };

  std::vector<Var<double>> leaves;
  objective(true, &leaves);
  std::vector<Tensor<double>> analytic;
  for (auto& l : leaves) analytic.push_back(l->has_grad ? l->grad : Tensor<double>(l->value.shape()));
  std::vector<Tensor<double>> param_grads;
  for (auto* p : params) param_grads.push_back(p->grad);

  GradReport r;
  auto probe = [&](double& slot, double a, const std::string& label) {
    const double keep = slot;
    slot = keep + h;
    const double up = objective(false, nullptr);
    slot = keep - h;
    const double down = objective(false, nullptr);
    slot = keep;
    const double numeric = (up - down) / (2 * h);
    const double e = rel_error(a, numeric);
    ++r.checked;
    if (e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst = label + " analytic " + std::to_string(a) + " numeric " + std::to_string(numeric);
    }
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      probe(inputs[i][k], analytic[i][k], "input" + std::to_string(i) + "[" + std::to_string(k) + "]");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i]->value.size(); ++k) {
      probe(params[i]->value[k], param_grads[i][k], params[i]->name + "[" + std::to_string(k) + "]");
    }
  }
  return r;
}

/// Counts by visiting every pixel and comparing labels directly.
inline ConfusionCounts tally(const Mask& pred, const Mask& gt) {
  ConfusionCounts c;
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      const bool p = pred.at(x, y) == 1, g = gt.at(x, y) == 1;
      if (p && g) ++c.tp;
      else if (p && !g) ++c.fp;
      else if (!p && g) ++c.fn;
      else ++c.tn;
    }
  return c;
}

/// Ratios written out from their definitions with 0/0 = 1.
inline double ratio(double num, double den) { return den == 0 ? 1.0 : num / den; }
inline MetricsReport reference_metrics(const ConfusionCounts& c) {
  const double tp = c.tp, fp = c.fp, tn = c.tn, fn = c.fn;
  return {ratio(tp + tn, tp + tn + fp + fn), ratio(tn, tn + fp), ratio(tp, tp + fp),
          ratio(tp, tp + fn), ratio(2 * tp, 2 * tp + fp + fn)};
}

/// Quantile at probability q on sorted data: position q * (n - 1), linear
/// between neighbours.
inline double reference_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1 - frac) + v[i + 1] * frac;
}

/// Origins by brute force: walk x = 0, s, 2s, ... and replace the first
/// window that overruns the image with one flush against the edge.
inline std::vector<int> enumerate_origins(int dim, int patch, int overlap) {
  std::vector<int> out;
  if (dim <= patch) return {0};
  for (int x = 0;; x += patch - overlap) {
    if (x + patch >= dim) {
      out.push_back(dim - patch);
      break;
    }
    out.push_back(x);
  }
  return out;
}

/// Temporary directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("swunet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

/// Bright elliptical blobs on a dim noisy background. Writes img/, gt/ and
/// manifest.csv under `dir`; splits cycle through `splits`.
inline std::filesystem::path make_blob_dataset(const std::filesystem::path& dir, int count,
                                               int width, int height, std::uint64_t seed,
                                               const std::vector<Split>& splits = {Split::kTrain}) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::filesystem::create_directories(dir / "img");
  std::filesystem::create_directories(dir / "gt");
  std::vector<ManifestRecord> records;
  for (int k = 0; k < count; ++k) {
    GrayImage img(width, height), gt(width, height);
    const int blobs = 1 + k % 3;
    std::vector<std::array<double, 4>> shapes;
    for (int b = 0; b < blobs; ++b) {
      shapes.push_back({width * (0.2 + 0.6 * u(gen)), height * (0.2 + 0.6 * u(gen)),
                        width * (0.08 + 0.12 * u(gen)), height * (0.08 + 0.12 * u(gen))});
    }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        bool inside = false;
        for (const auto& s : shapes) {
          const double dx = (x - s[0]) / s[2], dy = (y - s[1]) / s[3];
          inside |= dx * dx + dy * dy <= 1.0;
        }
        const double noise = 30 * (u(gen) - 0.5);
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp((inside ? 190.0 : 60.0) + noise, 0.0, 255.0));
        gt.at(x, y) = inside ? 255 : 0;
      }
    const std::string name = "s" + std::to_string(k) + ".png";
    write_png(dir / "img" / name, img);
    write_png(dir / "gt" / name, gt);
    records.push_back({dir / "img" / name, dir / "gt" / name, 1 + k % 10,
                       splits[static_cast<std::size_t>(k) % splits.size()], 0});
  }
  write_manifest(dir / "manifest.csv", records);
  return dir / "manifest.csv";
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace swunet::testing
