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

#include "swunet/ops.hpp"

namespace swunet {

inline constexpr double kLogEpsilon = 1e-7;
inline constexpr double kDiceSmoothing = 1.0;

/// Weights of the hybrid objective lambda1 * CE + lambda2 * dice.
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 0.5;

  void validate() const;
};

/// Mean over pixels of -sum_c y * log(p + 1e-7).
template <typename T>
Var<T> cross_entropy_loss(Tape<T>& tape, const Var<T>& probs,
                          const Tensor<T>& onehot);

/// 1 - mean_c (2 sum p*y + 1) / (sum p + sum y + 1).
template <typename T>
Var<T> dice_loss(Tape<T>& tape, const Var<T>& probs, const Tensor<T>& onehot);

template <typename T>
Var<T> hybrid_loss(Tape<T>& tape, const Var<T>& probs, const Tensor<T>& onehot,
                   const LossWeights& weights);

}  // namespace swunet
