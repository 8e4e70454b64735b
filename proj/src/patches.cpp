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

#include "swunet/patches.hpp"

#include <algorithm>

#include "swunet/errors.hpp"

namespace swunet {

template <typename T>
Tensor<T> normalize(const GrayImage& image) {
  if (image.width < 1 || image.height < 1) throw ArgumentError("empty image");
  Tensor<T> out(1, 1, image.height, image.width);
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<T>(image.pixels[i]) / static_cast<T>(255);
  }
  return out;
}

std::vector<std::pair<int, int>> PatchGrid::origins() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(size());
  for (int y : ys) {
    for (int x : xs) out.emplace_back(x, y);
  }
  return out;
}

std::vector<int> plan_axis(int dimension, int patch, int overlap) {
  if (patch < 1 || overlap < 0 || patch <= overlap) {
    throw ArgumentError("patch size must exceed overlap (patch " +
                        std::to_string(patch) + ", overlap " + std::to_string(overlap) + ")");
  }
  if (dimension < 1) throw ArgumentError("image dimension must be positive");
  std::vector<int> origins = {0};
  if (dimension <= patch) return origins;
  const int stride = patch - overlap;
  for (int x = stride; x + patch <= dimension; x += stride) origins.push_back(x);
  if (origins.back() + patch < dimension) origins.push_back(dimension - patch);
  return origins;
}

PatchGrid plan_patches(int image_w, int image_h, int patch, int overlap) {
  PatchGrid g;
  g.patch = patch;
  g.overlap = overlap;
  g.image_w = image_w;
  g.image_h = image_h;
  g.xs = plan_axis(image_w, patch, overlap);
  g.ys = plan_axis(image_h, patch, overlap);
  return g;
}

template <typename T>
std::vector<Tensor<T>> extract_patches(const Tensor<T>& image, const PatchGrid& grid) {
  if (image.n() != 1 || image.w() != grid.image_w || image.h() != grid.image_h) {
    throw ArgumentError("patch grid planned for " + std::to_string(grid.image_w) + "x" +
                        std::to_string(grid.image_h) + " does not match image " +
                        image.shape().str());
  }
  const int p = grid.patch;
  std::vector<Tensor<T>> out;
  out.reserve(grid.size());
  for (auto [ox, oy] : grid.origins()) {
    Tensor<T> patch(1, image.c(), p, p);
    const int rows = std::min(p, grid.image_h - oy);
    const int cols = std::min(p, grid.image_w - ox);
    for (int c = 0; c < image.c(); ++c) {
      for (int y = 0; y < rows; ++y) {
        const T* src = image.plane(0, c) + static_cast<std::size_t>(oy + y) * grid.image_w + ox;
        std::copy_n(src, cols, patch.plane(0, c) + static_cast<std::size_t>(y) * p);
      }
    }
    out.push_back(std::move(patch));
  }
  return out;
}

template <typename T>
Tensor<T> stitch(std::span<const Tensor<T>> patches, const PatchGrid& grid) {
  if (patches.size() != grid.size() || patches.empty()) {
    throw ArgumentError("stitch expects " + std::to_string(grid.size()) +
                        " patches, got " + std::to_string(patches.size()));
  }
  const int p = grid.patch;
  const int channels = patches.front().c();
  for (const auto& t : patches) {
    if (t.n() != 1 || t.c() != channels || t.h() != p || t.w() != p) {
      throw ArgumentError("stitch: patch " + t.shape().str() + " is not (1," +
                          std::to_string(channels) + "," + std::to_string(p) + "," +
                          std::to_string(p) + ")");
    }
  }
  const std::size_t plane = static_cast<std::size_t>(grid.image_w) * grid.image_h;
  // Extended precision keeps the average of identical values exact.
  std::vector<long double> acc(plane * channels, 0.0L);
  std::vector<int> cover(plane, 0);
  const auto origins = grid.origins();
  for (std::size_t k = 0; k < origins.size(); ++k) {
    const auto [ox, oy] = origins[k];
    const int rows = std::min(p, grid.image_h - oy);
    const int cols = std::min(p, grid.image_w - ox);
    for (int y = 0; y < rows; ++y) {
      const std::size_t row = static_cast<std::size_t>(oy + y) * grid.image_w + ox;
      for (int x = 0; x < cols; ++x) ++cover[row + x];
      for (int c = 0; c < channels; ++c) {
        const T* src = patches[k].plane(0, c) + static_cast<std::size_t>(y) * p;
        long double* dst = acc.data() + c * plane + row;
        for (int x = 0; x < cols; ++x) dst[x] += src[x];
      }
    }
  }
  Tensor<T> out(1, channels, grid.image_h, grid.image_w);
  for (int c = 0; c < channels; ++c) {
    T* dst = out.plane(0, c);
    for (std::size_t i = 0; i < plane; ++i) {
      dst[i] = static_cast<T>(acc[c * plane + i] / cover[i]);
    }
  }
  return out;
}

template <typename T>
Tensor<T> one_hot(const Mask& mask, int num_classes) {
  if (num_classes < 1) throw ArgumentError("num_classes must be positive");
  Tensor<T> out(1, num_classes, mask.height, mask.width);
  const std::size_t plane = mask.labels.size();
  for (std::size_t i = 0; i < plane; ++i) {
    const int k = mask.labels[i];
    if (k >= num_classes) {
      throw DataError("label " + std::to_string(k) + " outside " +
                      std::to_string(num_classes) + " classes");
    }
    out.plane(0, k)[i] = T(1);
  }
  return out;
}

template <typename T>
Mask argmax_channels(const Tensor<T>& probs) {
  if (probs.n() != 1) throw ShapeError("argmax_channels expects a single image");
  Mask m(probs.w(), probs.h());
  const std::size_t plane = probs.shape().plane();
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    T v = probs.plane(0, 0)[i];
    for (int c = 1; c < probs.c(); ++c) {
      if (probs.plane(0, c)[i] > v) {
        v = probs.plane(0, c)[i];
        best = c;
      }
    }
    m.labels[i] = static_cast<std::uint8_t>(best);
  }
  return m;
}

Mask binarize(const GrayImage& image) {
  Mask m(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    m.labels[i] = image.pixels[i] >= kForegroundThreshold ? 1 : 0;
  }
  return m;
}

GrayImage mask_to_image(const Mask& mask) {
  GrayImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    img.pixels[i] = mask.labels[i] ? 255 : 0;
  }
  return img;
}

#define SWUNET_INSTANTIATE_PATCHES(T)                                              \
  template Tensor<T> normalize<T>(const GrayImage&);                               \
  template std::vector<Tensor<T>> extract_patches(const Tensor<T>&, const PatchGrid&); \
  template Tensor<T> stitch(std::span<const Tensor<T>>, const PatchGrid&);         \
  template Tensor<T> one_hot<T>(const Mask&, int);                                 \
  template Mask argmax_channels(const Tensor<T>&);

SWUNET_INSTANTIATE_PATCHES(float)
SWUNET_INSTANTIATE_PATCHES(double)

}  // namespace swunet
