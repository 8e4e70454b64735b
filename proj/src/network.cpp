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

#include "swunet/network.hpp"

#include <cstdio>
#include <sstream>

namespace swunet {

std::string_view to_string(BlockKind kind) {
  return kind == BlockKind::kCbr ? "cbr" : "recurrent";
}

BlockKind parse_block_kind(std::string_view text) {
  if (text == "cbr") return BlockKind::kCbr;
  if (text == "recurrent") return BlockKind::kRecurrent;
  throw ConfigError("block kind must be 'cbr' or 'recurrent', got '" +
                    std::string(text) + "'");
}

void SwitchConfig::validate() const {
  if (base_filters.empty()) throw ConfigError("base_filters must not be empty");
  for (std::size_t i = 0; i < base_filters.size(); ++i) {
    if (base_filters[i] < 1) throw ConfigError("base filters must be positive");
    if (i == 0) continue;
    const int prev = base_filters[i - 1];
    const int cur = base_filters[i];
    if (cur <= prev || cur % prev != 0) {
      throw ConfigError("base_filters must increase by powers of 2");
    }
    const int ratio = cur / prev;
    if ((ratio & (ratio - 1)) != 0) {
      throw ConfigError("base_filters must increase by powers of 2");
    }
  }
  if (recurrence_steps < 0) throw ConfigError("recurrence_steps must be >= 0");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (depth() > 16) throw ConfigError("depth above 16 is not supported");
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {
      "attention-unet", "r2u-net", "s-r2u-net", "s-r2f2u-net",
      "s-r2f2-attn-u-net"};
  return names;
}

SwitchConfig named_config(std::string_view name) {
  const std::vector<int> wide = {64, 128, 256, 512, 1024};
  const std::vector<int> narrow = {32, 64, 128, 256, 512};
  SwitchConfig c;
  if (name == "attention-unet") {
    c.attention = true;
    c.base_filters = wide;
  } else if (name == "r2u-net") {
    c.residual = true;
    c.set1 = c.set2 = BlockKind::kRecurrent;
    c.base_filters = wide;
  } else if (name == "s-r2u-net") {
    c.residual = true;
    c.set2 = BlockKind::kRecurrent;
    c.base_filters = wide;
  } else if (name == "s-r2f2u-net") {
    c.residual = true;
    c.set2 = BlockKind::kRecurrent;
    c.filter_doubling = true;
    c.base_filters = narrow;
  } else if (name == "s-r2f2-attn-u-net") {
    c.residual = true;
    c.set2 = BlockKind::kRecurrent;
    c.filter_doubling = true;
    c.attention = true;
    c.base_filters = narrow;
  } else {
    throw ArgumentError("unknown model '" + std::string(name) + "'");
  }
  return c;
}

namespace {

template <typename T>
SetBlock<T> make_set(ParameterStore<T>& store, const std::string& prefix,
                     BlockKind kind, int in, int filters, int steps, Rng& rng) {
  if (kind == BlockKind::kCbr) return make_cbr(store, prefix, in, filters, rng);
  return make_rcl(store, prefix, in, filters, steps, rng);
}

template <typename T>
Var<T> run_set(Tape<T>& tape, const Var<T>& x, const SetBlock<T>& block,
               Mode mode) {
  if (const auto* cbr = std::get_if<CbrParams<T>>(&block)) {
    return cbr_block(tape, x, *cbr, mode);
  }
  return rcl_block(tape, x, std::get<RclParams<T>>(block), mode);
}

LevelPlan plan_level(const SwitchConfig& cfg, int level, bool decoder, int f0) {
  LevelPlan p;
  p.level = level;
  p.decoder = decoder;
  p.f0 = f0;
  p.f1 = cfg.base_filters[level];
  p.f2 = doubled_filters(p.f1, cfg.filter_doubling);
  if (cfg.residual) {
    p.residual_filters = p.f2;
    // With doubling, the projection width must agree with the generalised
    // rule for three sets per level.
    if (cfg.filter_doubling && residual_filter_count(p.f1, 2) != p.f2) {
      throw ConfigError("residual projection width disagrees with set A=2");
    }
  }
  return p;
}

}  // namespace

template <typename T>
Network<T> Network<T>::build(const SwitchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Network net;
  net.cfg_ = cfg;
  Rng rng(seed);
  auto& store = net.store_;
  const int depth = cfg.depth();
  const int steps = cfg.recurrence_steps;

  int channels = cfg.input_channels;
  for (int level = 0; level < depth; ++level) {
    const std::string name = "enc" + std::to_string(level);
    const int scale = 1 << level;
    if (level > 0) net.layers_.push_back({name + ".pool", channels, scale});
    EncoderLevel<T> enc;
    enc.plan = plan_level(cfg, level, false, channels);
    enc.set1 = make_set(store, name + ".set1", cfg.set1, channels, enc.plan.f1, steps, rng);
    net.layers_.push_back({name + ".set1", enc.plan.f1, scale});
    enc.set2 = make_set(store, name + ".set2", cfg.set2, enc.plan.f1, enc.plan.f2, steps, rng);
    net.layers_.push_back({name + ".set2", enc.plan.f2, scale});
    if (cfg.residual) {
      enc.residual = make_residual(store, name + ".residual", channels, enc.plan.f2, rng);
      net.layers_.push_back({name + ".residual", enc.plan.f2, scale});
    }
    channels = enc.plan.f2;
    net.encoder_.push_back(std::move(enc));
  }

  for (int level = depth - 2; level >= 0; --level) {
    const std::string name = "dec" + std::to_string(level);
    const int scale = 1 << level;
    DecoderLevel<T> dec;
    const int skip = net.encoder_[level].plan.f2;
    dec.up = make_conv(store, name + ".up", channels, channels, 3, rng);
    net.layers_.push_back({name + ".up", channels, scale});
    if (cfg.attention) {
      dec.gate = make_attention_gate(store, name + ".gate", skip, channels, rng);
      net.layers_.push_back({name + ".gate", skip, scale});
    }
    const int concat = skip + channels;
    net.layers_.push_back({name + ".concat", concat, scale});
    dec.plan = plan_level(cfg, level, true, concat);
    dec.set1 = make_set(store, name + ".set1", cfg.set1, concat, dec.plan.f1, steps, rng);
    net.layers_.push_back({name + ".set1", dec.plan.f1, scale});
    dec.set2 = make_set(store, name + ".set2", cfg.set2, dec.plan.f1, dec.plan.f2, steps, rng);
    net.layers_.push_back({name + ".set2", dec.plan.f2, scale});
    if (cfg.residual) {
      dec.residual = make_residual(store, name + ".residual", concat, dec.plan.f2, rng);
      net.layers_.push_back({name + ".residual", dec.plan.f2, scale});
    }
    channels = dec.plan.f2;
    net.decoder_.push_back(std::move(dec));
  }

  net.head_ = make_conv(store, "head", channels, cfg.num_classes, 1, rng);
  net.layers_.push_back({"head", cfg.num_classes, 1});
  net.layers_.push_back({"softmax", cfg.num_classes, 1});
  return net;
}

template <typename T>
Var<T> Network<T>::run_level(Tape<T>& tape, const Var<T>& s0,
                             const SetBlock<T>& set1, const SetBlock<T>& set2,
                             const std::optional<ResidualParams<T>>& residual,
                             Mode mode) {
  Var<T> s1 = run_set(tape, s0, set1, mode);
  Var<T> s2 = run_set(tape, s1, set2, mode);
  if (residual) s2 = residual_wrap(tape, s0, s2, *residual);
  return s2;
}

template <typename T>
Var<T> Network<T>::forward(Tape<T>& tape, const Var<T>& batch, Mode mode,
                           std::vector<Tensor<T>>* decoder_taps) {
  const Shape s = batch->value.shape();
  if (s.c != cfg_.input_channels) {
    throw ShapeError("network expects " + std::to_string(cfg_.input_channels) +
                     " input channels, batch has " + std::to_string(s.c));
  }
  const int factor = 1 << (cfg_.depth() - 1);
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw ShapeError("input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " is not divisible by " + std::to_string(factor));
  }
  std::vector<Var<T>> skips;
  Var<T> x = batch;
  for (std::size_t level = 0; level < encoder_.size(); ++level) {
    if (level > 0) x = maxpool2(tape, x);
    const auto& enc = encoder_[level];
    x = run_level(tape, x, enc.set1, enc.set2, enc.residual, mode);
    skips.push_back(x);
  }
  for (const auto& dec : decoder_) {
    Var<T> up = conv_layer(tape, upsample2(tape, x), dec.up);
    Var<T> skip = skips[static_cast<std::size_t>(dec.plan.level)];
    if (dec.gate) skip = attention_gate(tape, skip, up, *dec.gate);
    x = run_level(tape, concat_channels(tape, skip, up), dec.set1, dec.set2,
                  dec.residual, mode);
    if (decoder_taps) decoder_taps->push_back(x->value);
  }
  return softmax_channels(tape, conv_layer(tape, x, head_));
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& batch,
                              std::vector<Tensor<T>>* decoder_taps) {
  Tape<T> tape(false);
  Var<T> out = forward(tape, tape.constant(batch), Mode::kInfer, decoder_taps);
  return std::move(out->value);
}

template <typename T>
std::vector<LayerSummary> Network<T>::summary(int h, int w) const {
  std::vector<LayerSummary> rows;
  for (const auto& layer : layers_) {
    LayerSummary row;
    row.name = layer.name;
    row.output = Shape{1, layer.channels, std::max(h / layer.downscale, 1),
                       std::max(w / layer.downscale, 1)};
    const std::string prefix = layer.name + ".";
    for (const auto& p : store_.entries()) {
      if (p->trainable && p->name.compare(0, prefix.size(), prefix) == 0) {
        row.parameters += p->value.size();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_summary(const std::vector<LayerSummary>& rows) {
  std::ostringstream out;
  out << "layer\toutput_shape\tparameters\n";
  std::size_t total = 0;
  for (const auto& r : rows) {
    out << r.name << '\t' << r.output.str() << '\t' << r.parameters << '\n';
    total += r.parameters;
  }
  char millions[64];
  std::snprintf(millions, sizeof(millions), "%.2f", static_cast<double>(total) / 1e6);
  out << "total\t\t" << total << '\n';
  out << "total_millions\t\t" << millions << '\n';
  return out.str();
}

template class Network<float>;
template class Network<double>;

}  // namespace swunet
