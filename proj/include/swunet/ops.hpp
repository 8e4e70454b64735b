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

#include "swunet/autodiff.hpp"

namespace swunet {

enum class Padding { kSame, kValid };
enum class Mode { kTrain, kInfer };

/// Running statistics and hyper-parameters of one batch-normalisation site.
/// `running_mean`/`running_var` have shape (c,1,1,1) and are updated in
/// train mode.
template <typename T>
struct BatchNormState {
  Tensor<T>* running_mean = nullptr;
  Tensor<T>* running_var = nullptr;
  double momentum = 0.99;
  double epsilon = 1e-5;
};

/// Cross-correlation. `weights` is (out, in, kh, kw); `bias` may be null and
/// otherwise holds `out` values. Same padding follows the TensorFlow rule
/// (output = ceil(in / stride), extra padding on the bottom/right).
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& weights,
              const Var<T>& bias, int stride = 1,
              Padding padding = Padding::kSame);

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x);

/// Softmax over the channel axis at every pixel. Requires c >= 2.
template <typename T>
Var<T> softmax_channels(Tape<T>& tape, const Var<T>& x);

/// gamma/beta hold c values. Train mode normalises with the biased batch
/// statistics over n*h*w and updates `state`; infer mode reads it.
template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma,
                 const Var<T>& beta, const BatchNormState<T>& state,
                 Mode mode);

/// 2x2 window, stride 2. Ties resolve to the first element in row-major
/// window order.
template <typename T>
Var<T> maxpool2(Tape<T>& tape, const Var<T>& x);

/// Nearest-neighbour x2.
template <typename T>
Var<T> upsample2(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// Elementwise product; `b` may have a single channel, broadcast over a's.
template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(Tape<T>& tape, const Var<T>& x, T factor);

/// Sum of all elements as a (1,1,1,1) tensor.
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

/// Channels [begin, end) of x.
template <typename T>
Var<T> slice_channels(Tape<T>& tape, const Var<T>& x, int begin, int end);

}  // namespace swunet
