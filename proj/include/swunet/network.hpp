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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swunet/blocks.hpp"

namespace swunet {

enum class BlockKind { kCbr, kRecurrent };

std::string_view to_string(BlockKind kind);
BlockKind parse_block_kind(std::string_view text);

/// Complete description of one switch-configured encoder-decoder network.
struct SwitchConfig {
  bool residual = false;
  bool attention = false;
  bool filter_doubling = false;
  BlockKind set1 = BlockKind::kCbr;
  BlockKind set2 = BlockKind::kCbr;
  int recurrence_steps = 2;
  std::vector<int> base_filters;
  int num_classes = 2;
  int input_channels = 1;

  int depth() const { return static_cast<int>(base_filters.size()); }
  /// Throws ConfigError on the first violated invariant.
  void validate() const;
  bool operator==(const SwitchConfig&) const = default;
};

/// attention-unet | r2u-net | s-r2u-net | s-r2f2u-net | s-r2f2-attn-u-net
SwitchConfig named_config(std::string_view name);
const std::vector<std::string>& model_names();

/// Channel layout of one encoder or decoder level.
struct LevelPlan {
  int level = 0;
  bool decoder = false;
  int f0 = 0;  // input set s_L0 (after concatenation on the decoder side)
  int f1 = 0;
  int f2 = 0;
  int residual_filters = 0;  // 0 when the residual switch is off
};

struct LayerSummary {
  std::string name;
  Shape output;
  std::size_t parameters = 0;
};

template <typename T>
using SetBlock = std::variant<CbrParams<T>, RclParams<T>>;

template <typename T>
struct EncoderLevel {
  LevelPlan plan;
  SetBlock<T> set1;
  SetBlock<T> set2;
  std::optional<ResidualParams<T>> residual;
};

template <typename T>
struct DecoderLevel {
  LevelPlan plan;
  ConvParams<T> up;  // 3x3, channel preserving, after nearest x2
  std::optional<AttentionGateParams<T>> gate;
  SetBlock<T> set1;
  SetBlock<T> set2;
  std::optional<ResidualParams<T>> residual;
};

template <typename T>
class Network {
 public:
  static Network build(const SwitchConfig& cfg, std::uint64_t seed = 0);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const SwitchConfig& config() const { return cfg_; }
  ParameterStore<T>& store() { return store_; }
  const ParameterStore<T>& store() const { return store_; }
  const std::vector<EncoderLevel<T>>& encoder() const { return encoder_; }
  const std::vector<DecoderLevel<T>>& decoder() const { return decoder_; }

  /// Per-pixel class probabilities for an (n, input_channels, h, w) batch;
  /// h and w must be divisible by 2^(depth-1). `decoder_taps` receives the
  /// output of every decoder level, deepest first.
  Var<T> forward(Tape<T>& tape, const Var<T>& batch, Mode mode,
                 std::vector<Tensor<T>>* decoder_taps = nullptr);

  /// Inference without recording.
  Tensor<T> predict(const Tensor<T>& batch,
                    std::vector<Tensor<T>>* decoder_taps = nullptr);

  std::size_t parameter_count() const { return store_.trainable_count(); }

  /// One row per layer for an input of h x w; rows sum to parameter_count().
  std::vector<LayerSummary> summary(int h, int w) const;

 private:
  struct LayerInfo {
    std::string name;
    int channels;
    int downscale;
  };

  Network() = default;
  Var<T> run_level(Tape<T>& tape, const Var<T>& s0, const SetBlock<T>& set1,
                   const SetBlock<T>& set2,
                   const std::optional<ResidualParams<T>>& residual, Mode mode);

  SwitchConfig cfg_;
  ParameterStore<T> store_;
  std::vector<EncoderLevel<T>> encoder_;
  std::vector<DecoderLevel<T>> decoder_;
  ConvParams<T> head_;
  std::vector<LayerInfo> layers_;
};

template <typename T>
std::size_t count_parameters(const Network<T>& net) {
  return net.parameter_count();
}

/// Tab-separated per-layer report followed by the total in raw count and
/// millions with two decimals.
std::string format_summary(const std::vector<LayerSummary>& rows);

}  // namespace swunet
