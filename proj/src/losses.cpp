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

#include "swunet/losses.hpp"

#include <cmath>
#include <vector>

namespace swunet {

void LossWeights::validate() const {
  if (!std::isfinite(lambda1) || !std::isfinite(lambda2) || lambda1 < 0 ||
      lambda2 < 0) {
    throw ArgumentError("loss weights must be finite and nonnegative");
  }
  if (lambda1 == 0 && lambda2 == 0) {
    throw ArgumentError("loss weights must not both be zero");
  }
}

namespace {

template <typename T>
void check_target(const Var<T>& probs, const Tensor<T>& onehot, const char* op) {
  if (!(probs->value.shape() == onehot.shape())) {
    throw ShapeError(std::string(op) + ": prediction " + probs->value.shape().str() +
                     " vs target " + onehot.shape().str());
  }
}

}  // namespace

template <typename T>
Var<T> cross_entropy_loss(Tape<T>& tape, const Var<T>& probs,
                          const Tensor<T>& onehot) {
  check_target(probs, onehot, "cross_entropy_loss");
  const Shape s = onehot.shape();
  const double pixels = static_cast<double>(s.n) * s.plane();
  auto p = probs->value.data();
  auto y = onehot.data();
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != T(0)) acc -= y[i] * std::log(static_cast<double>(p[i]) + kLogEpsilon);
  }
  return tape.record(Tensor<T>::scalar(static_cast<T>(acc / pixels)), {probs},
                     [probs, onehot, pixels](Node<T>& self) {
                       const double g = self.grad[0];
                       auto p = probs->value.data();
                       auto y = onehot.data();
                       auto d = probs->grad_buffer().data();
                       for (std::size_t i = 0; i < p.size(); ++i) {
                         if (y[i] == T(0)) continue;
                         d[i] += static_cast<T>(-g * y[i] /
                                                ((static_cast<double>(p[i]) + kLogEpsilon) * pixels));
                       }
                     });
}

template <typename T>
Var<T> dice_loss(Tape<T>& tape, const Var<T>& probs, const Tensor<T>& onehot) {
  check_target(probs, onehot, "dice_loss");
  const Shape s = onehot.shape();
  const std::size_t plane = s.plane();
  std::vector<double> numer(s.c), denom(s.c);
  for (int c = 0; c < s.c; ++c) {
    double inter = 0, ps = 0, ys = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = probs->value.plane(n, c);
      const T* y = onehot.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        inter += static_cast<double>(p[i]) * y[i];
        ps += p[i];
        ys += y[i];
      }
    }
    numer[c] = 2 * inter + kDiceSmoothing;
    denom[c] = ps + ys + kDiceSmoothing;
  }
  double mean_dice = 0;
  for (int c = 0; c < s.c; ++c) mean_dice += numer[c] / denom[c];
  mean_dice /= s.c;
  return tape.record(
      Tensor<T>::scalar(static_cast<T>(1.0 - mean_dice)), {probs},
      [probs, onehot, numer, denom](Node<T>& self) {
        const Shape s = onehot.shape();
        const std::size_t plane = s.plane();
        const double g = self.grad[0];
        auto& gp = probs->grad_buffer();
        for (int c = 0; c < s.c; ++c) {
          const double d2 = denom[c] * denom[c];
          const double k = -g / s.c;
          for (int n = 0; n < s.n; ++n) {
            const T* y = onehot.plane(n, c);
            T* d = gp.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
              d[i] += static_cast<T>(k * (2.0 * y[i] * denom[c] - numer[c]) / d2);
            }
          }
        }
      });
}

template <typename T>
Var<T> hybrid_loss(Tape<T>& tape, const Var<T>& probs, const Tensor<T>& onehot,
                   const LossWeights& weights) {
  weights.validate();
  Var<T> ce = cross_entropy_loss(tape, probs, onehot);
  Var<T> dl = dice_loss(tape, probs, onehot);
  return add(tape, scale(tape, ce, static_cast<T>(weights.lambda1)),
             scale(tape, dl, static_cast<T>(weights.lambda2)));
}

#define SWUNET_INSTANTIATE_LOSSES(T)                                          \
  template Var<T> cross_entropy_loss(Tape<T>&, const Var<T>&, const Tensor<T>&); \
  template Var<T> dice_loss(Tape<T>&, const Var<T>&, const Tensor<T>&);       \
  template Var<T> hybrid_loss(Tape<T>&, const Var<T>&, const Tensor<T>&,      \
                              const LossWeights&);

SWUNET_INSTANTIATE_LOSSES(float)
SWUNET_INSTANTIATE_LOSSES(double)

}  // namespace swunet
