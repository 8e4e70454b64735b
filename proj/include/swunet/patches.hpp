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

#include <span>
#include <utility>
#include <vector>

#include "swunet/image_io.hpp"
#include "swunet/metrics.hpp"
#include "swunet/tensor.hpp"

namespace swunet {

inline constexpr int kDefaultPatch = 512;
inline constexpr int kDefaultOverlap = 10;
inline constexpr std::uint8_t kForegroundThreshold = 128;

/// v -> v / 255 as a (1,1,h,w) tensor.
template <typename T>
Tensor<T> normalize(const GrayImage& image);

/// Patch origins for one image. Along each axis origins advance by
/// patch - overlap; the first origin whose window would overrun the image
/// is clamped to (dimension - patch). An axis shorter than the patch gets a
/// single origin 0 and extraction zero-pads.
struct PatchGrid {
  int patch = kDefaultPatch;
  int overlap = kDefaultOverlap;
  int image_w = 0;
  int image_h = 0;
  std::vector<int> xs;
  std::vector<int> ys;

  int stride() const { return patch - overlap; }
  std::size_t size() const { return xs.size() * ys.size(); }
  /// Row-major (y outer, x inner) list of top-left corners.
  std::vector<std::pair<int, int>> origins() const;
};

std::vector<int> plan_axis(int dimension, int patch, int overlap);
PatchGrid plan_patches(int image_w, int image_h, int patch = kDefaultPatch,
                       int overlap = kDefaultOverlap);

/// Copies each window of a (1,c,h,w) image in origin order.
template <typename T>
std::vector<Tensor<T>> extract_patches(const Tensor<T>& image, const PatchGrid& grid);

/// Per-pixel mean of all patch values covering the pixel.
template <typename T>
Tensor<T> stitch(std::span<const Tensor<T>> patches, const PatchGrid& grid);

/// Channel k is 1 where mask == k.
template <typename T>
Tensor<T> one_hot(const Mask& mask, int num_classes);

/// Channel index of the maximum per pixel of a (1,c,h,w) tensor; ties go to
/// the lower channel.
template <typename T>
Mask argmax_channels(const Tensor<T>& probs);

/// Foreground where value >= 128.
Mask binarize(const GrayImage& image);
/// Labels scaled to {0, 255}.
GrayImage mask_to_image(const Mask& mask);

}  // namespace swunet
