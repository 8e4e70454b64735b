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

#include "swunet/blocks.hpp"

namespace swunet {

int residual_filter_count(int base_filter, int max_set) {
  if (base_filter < 1) throw ArgumentError("base filter must be >= 1");
  if (max_set < 0) throw ArgumentError("max set index must be >= 0");
  if (max_set == 0) return base_filter;
  return base_filter << (max_set - 1);
}

int doubled_filters(int f_l1, bool filter_doubling) {
  if (f_l1 < 1) throw ArgumentError("filter count must be >= 1");
  return filter_doubling ? 2 * f_l1 : f_l1;
}

namespace {

template <typename T>
BatchNormParams<T> make_bn(ParameterStore<T>& store, const std::string& prefix,
                           int channels, int sites) {
  BatchNormParams<T> bn;
  bn.gamma = &store.vector(prefix + ".gamma", channels, T(1));
  bn.beta = &store.vector(prefix + ".beta", channels, T(0));
  for (int s = 0; s < sites; ++s) {
    const std::string suffix = sites == 1 ? "" : ".s" + std::to_string(s);
    bn.running_mean.push_back(&store.buffer(prefix + ".running_mean" + suffix, channels, T(0)));
    bn.running_var.push_back(&store.buffer(prefix + ".running_var" + suffix, channels, T(1)));
  }
  return bn;
}

template <typename T>
Var<T> bn_apply(Tape<T>& tape, const Var<T>& x, const BatchNormParams<T>& bn,
                std::size_t site, Mode mode) {
  return batchnorm(tape, x, tape.param(*bn.gamma), tape.param(*bn.beta),
                   bn.state(site), mode);
}

}  // namespace

template <typename T>
ConvParams<T> make_conv(ParameterStore<T>& store, const std::string& prefix,
                        int in, int out, int kernel, Rng& rng, bool bias) {
  ConvParams<T> p;
  p.weight = &store.conv_weight(prefix + ".weight", out, in, kernel, kernel, rng);
  if (bias) p.bias = &store.vector(prefix + ".bias", out, T(0));
  return p;
}

template <typename T>
CbrParams<T> make_cbr(ParameterStore<T>& store, const std::string& prefix,
                      int in, int filters, Rng& rng) {
  CbrParams<T> p;
  p.conv = make_conv(store, prefix + ".conv", in, filters, 3, rng);
  p.bn = make_bn(store, prefix + ".bn", filters, 1);
  p.in_channels = in;
  p.filters = filters;
  return p;
}

template <typename T>
RclParams<T> make_rcl(ParameterStore<T>& store, const std::string& prefix,
                      int in, int filters, int steps, Rng& rng) {
  if (steps < 0) throw ArgumentError("recurrence steps must be >= 0");
  RclParams<T> p;
  p.feedforward = make_conv(store, prefix + ".ff", in, filters, 3, rng);
  for (int s = 1; s <= steps; ++s) {
    p.recurrent.push_back(&store.conv_weight(prefix + ".rec" + std::to_string(s) + ".weight",
                                             filters, filters, 3, 3, rng));
  }
  p.bn = make_bn(store, prefix + ".bn", filters, steps + 1);
  p.in_channels = in;
  p.filters = filters;
  p.steps = steps;
  return p;
}

template <typename T>
ResidualParams<T> make_residual(ParameterStore<T>& store,
                                const std::string& prefix, int in, int out,
                                Rng& rng) {
  return {make_conv(store, prefix + ".proj", in, out, 1, rng)};
}

template <typename T>
AttentionGateParams<T> make_attention_gate(ParameterStore<T>& store,
                                           const std::string& prefix,
                                           int x_channels, int g_channels,
                                           Rng& rng) {
  AttentionGateParams<T> p;
  p.x_channels = x_channels;
  p.g_channels = g_channels;
  p.inter = (x_channels + 1) / 2;
  p.theta_x = &store.conv_weight(prefix + ".theta_x", p.inter, x_channels, 1, 1, rng);
  p.phi_g = &store.conv_weight(prefix + ".phi_g", p.inter, g_channels, 1, 1, rng);
  p.b_g = &store.vector(prefix + ".b_g", p.inter, T(0));
  p.psi = &store.conv_weight(prefix + ".psi", 1, p.inter, 1, 1, rng);
  p.b_psi = &store.vector(prefix + ".b_psi", 1, T(0));
  return p;
}

template <typename T>
Var<T> conv_layer(Tape<T>& tape, const Var<T>& x, const ConvParams<T>& p) {
  Var<T> bias = p.bias ? tape.param(*p.bias) : Var<T>{};
  return conv2d(tape, x, tape.param(*p.weight), bias, 1, Padding::kSame);
}

template <typename T>
Var<T> cbr_block(Tape<T>& tape, const Var<T>& x, const CbrParams<T>& p,
                 Mode mode) {
  return relu(tape, bn_apply(tape, conv_layer(tape, x, p.conv), p.bn, 0, mode));
}

template <typename T>
Var<T> rcl_step(Tape<T>& tape, const Var<T>& feedforward, const Var<T>& prev,
                const RclParams<T>& p, int step, Mode mode) {
  if (step < 1 || step > p.steps) {
    throw ArgumentError("rcl step " + std::to_string(step) + " outside 1.." +
                        std::to_string(p.steps));
  }
  Var<T> rec = conv2d(tape, prev, tape.param(*p.recurrent[step - 1]), Var<T>{},
                      1, Padding::kSame);
  return relu(tape, bn_apply(tape, add(tape, feedforward, rec), p.bn,
                             static_cast<std::size_t>(step), mode));
}

template <typename T>
Var<T> rcl_block(Tape<T>& tape, const Var<T>& u, const RclParams<T>& p,
                 Mode mode, std::vector<Var<T>>* trace) {
  Var<T> ff = conv_layer(tape, u, p.feedforward);
  Var<T> x = relu(tape, bn_apply(tape, ff, p.bn, 0, mode));
  if (trace) trace->push_back(x);
  for (int s = 1; s <= p.steps; ++s) {
    x = rcl_step(tape, ff, x, p, s, mode);
    if (trace) trace->push_back(x);
  }
  return x;
}

template <typename T>
Var<T> residual_wrap(Tape<T>& tape, const Var<T>& s0, const Var<T>& s2,
                     const ResidualParams<T>& p) {
  const Shape a = s0->value.shape(), b = s2->value.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ShapeError("residual_wrap: spatial mismatch " + a.str() + " vs " + b.str());
  }
  return add(tape, conv_layer(tape, s0, p.projection), s2);
}

template <typename T>
Var<T> attention_gate(Tape<T>& tape, const Var<T>& x, const Var<T>& g,
                      const AttentionGateParams<T>& p, Var<T>* alpha) {
  const Shape sx = x->value.shape(), sg = g->value.shape();
  if (sx.n != sg.n || sx.h != sg.h || sx.w != sg.w) {
    throw ShapeError("attention_gate: x " + sx.str() + " and g " + sg.str() +
                     " differ in batch or spatial size");
  }
  Var<T> theta = conv2d(tape, x, tape.param(*p.theta_x), Var<T>{}, 1, Padding::kSame);
  Var<T> phi = conv2d(tape, g, tape.param(*p.phi_g), tape.param(*p.b_g), 1, Padding::kSame);
  Var<T> inter = relu(tape, add(tape, theta, phi));
  Var<T> q = conv2d(tape, inter, tape.param(*p.psi), tape.param(*p.b_psi), 1, Padding::kSame);
  Var<T> a = sigmoid(tape, q);
  if (alpha) *alpha = a;
  return mul(tape, x, a);
}

#define SWUNET_INSTANTIATE_BLOCKS(T)                                              \
  template ConvParams<T> make_conv(ParameterStore<T>&, const std::string&, int,  \
                                   int, int, Rng&, bool);                        \
  template CbrParams<T> make_cbr(ParameterStore<T>&, const std::string&, int,    \
                                 int, Rng&);                                     \
  template RclParams<T> make_rcl(ParameterStore<T>&, const std::string&, int,    \
                                 int, int, Rng&);                                \
  template ResidualParams<T> make_residual(ParameterStore<T>&,                   \
                                           const std::string&, int, int, Rng&);  \
  template AttentionGateParams<T> make_attention_gate(                           \
      ParameterStore<T>&, const std::string&, int, int, Rng&);                   \
  template Var<T> conv_layer(Tape<T>&, const Var<T>&, const ConvParams<T>&);     \
  template Var<T> cbr_block(Tape<T>&, const Var<T>&, const CbrParams<T>&, Mode); \
  template Var<T> rcl_step(Tape<T>&, const Var<T>&, const Var<T>&,               \
                           const RclParams<T>&, int, Mode);                      \
  template Var<T> rcl_block(Tape<T>&, const Var<T>&, const RclParams<T>&, Mode,  \
                            std::vector<Var<T>>*);                               \
  template Var<T> residual_wrap(Tape<T>&, const Var<T>&, const Var<T>&,          \
                                const ResidualParams<T>&);                       \
  template Var<T> attention_gate(Tape<T>&, const Var<T>&, const Var<T>&,         \
                                 const AttentionGateParams<T>&, Var<T>*);

SWUNET_INSTANTIATE_BLOCKS(float)
SWUNET_INSTANTIATE_BLOCKS(double)

}  // namespace swunet
