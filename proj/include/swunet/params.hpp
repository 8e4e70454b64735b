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

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "swunet/tensor.hpp"

namespace swunet {

/// Seedable generator with a platform-independent mapping to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Owns every tensor of a model, trainable or not, in creation order.
/// Entries live behind stable pointers so blocks can refer to them.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  /// Weight of shape (out, in, kh, kw), LeCun-uniform in +-sqrt(3 / fan_in).
  Parameter<T>& conv_weight(const std::string& name, int out, int in, int kh,
                            int kw, Rng& rng) {
    Tensor<T> v(out, in, kh, kw);
    const double bound = std::sqrt(3.0 / (static_cast<double>(in) * kh * kw));
    for (auto& e : v.data()) e = static_cast<T>(rng.uniform(-bound, bound));
    return insert(name, std::move(v), 4, true);
  }

  /// Vector parameter of `len` values, stored as (len,1,1,1).
  Parameter<T>& vector(const std::string& name, int len, T fill) {
    return insert(name, Tensor<T>(len, 1, 1, 1, fill), 1, true);
  }

  /// Non-trainable vector (running statistics).
  Parameter<T>& buffer(const std::string& name, int len, T fill) {
    return insert(name, Tensor<T>(len, 1, 1, 1, fill), 1, false);
  }

  const std::vector<std::unique_ptr<Parameter<T>>>& entries() const {
    return entries_;
  }

  std::size_t trainable_count() const {
    std::size_t total = 0;
    for (const auto& p : entries_) {
      if (p->trainable) total += p->value.size();
    }
    return total;
  }

  void zero_grad() {
    for (auto& p : entries_) p->zero_grad();
  }

 private:
  Parameter<T>& insert(const std::string& name, Tensor<T> v, int rank,
                       bool trainable) {
    if (!names_.insert(name).second) {
      throw ConfigError("duplicate parameter name '" + name + "'");
    }
    auto p = std::make_unique<Parameter<T>>(name, std::move(v), rank);
    p->trainable = trainable;
    entries_.push_back(std::move(p));
    return *entries_.back();
  }

  std::vector<std::unique_ptr<Parameter<T>>> entries_;
  std::unordered_set<std::string> names_;
};

}  // namespace swunet
