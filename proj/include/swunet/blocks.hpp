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

#include <string>
#include <vector>

#include "swunet/ops.hpp"
#include "swunet/params.hpp"

namespace swunet {

/// Filter count of the 1x1 residual projection for a level whose sets are
/// indexed 0..max_set: base * 2^(max_set - 1). max_set == 0 yields base.
int residual_filter_count(int base_filter, int max_set);

/// f_L2 given f_L1 and the filter-doubling switch.
int doubled_filters(int f_l1, bool filter_doubling);

template <typename T>
struct ConvParams {
  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;  // optional
};

/// Affine parameters plus one running-statistics pair per use site. CBR
/// blocks use one site; an RCL block uses one per unfolding step.
template <typename T>
struct BatchNormParams {
  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;
  std::vector<Parameter<T>*> running_mean;
  std::vector<Parameter<T>*> running_var;
  double momentum = 0.99;
  double epsilon = 1e-5;

  BatchNormState<T> state(std::size_t site) const {
    return {&running_mean.at(site)->value, &running_var.at(site)->value,
            momentum, epsilon};
  }
};

template <typename T>
struct CbrParams {
  ConvParams<T> conv;
  BatchNormParams<T> bn;
  int in_channels = 0;
  int filters = 0;
};

/// Recurrent convolutional layer unfolded for `steps` steps. `recurrent`
/// holds one 3x3 (filters -> filters) kernel per step.
template <typename T>
struct RclParams {
  ConvParams<T> feedforward;
  std::vector<Parameter<T>*> recurrent;
  BatchNormParams<T> bn;
  int in_channels = 0;
  int filters = 0;
  int steps = 0;
};

template <typename T>
struct ResidualParams {
  ConvParams<T> projection;
};

/// Additive attention gate. theta_x carries no bias; the gating path owns
/// b_g. `inter` = ceil(f_l / 2).
template <typename T>
struct AttentionGateParams {
  Parameter<T>* theta_x = nullptr;
  Parameter<T>* phi_g = nullptr;
  Parameter<T>* b_g = nullptr;
  Parameter<T>* psi = nullptr;
  Parameter<T>* b_psi = nullptr;
  int x_channels = 0;
  int g_channels = 0;
  int inter = 0;
};

template <typename T>
ConvParams<T> make_conv(ParameterStore<T>& store, const std::string& prefix,
                        int in, int out, int kernel, Rng& rng, bool bias = true);
template <typename T>
CbrParams<T> make_cbr(ParameterStore<T>& store, const std::string& prefix,
                      int in, int filters, Rng& rng);
template <typename T>
RclParams<T> make_rcl(ParameterStore<T>& store, const std::string& prefix,
                      int in, int filters, int steps, Rng& rng);
template <typename T>
ResidualParams<T> make_residual(ParameterStore<T>& store,
                                const std::string& prefix, int in, int out,
                                Rng& rng);
template <typename T>
AttentionGateParams<T> make_attention_gate(ParameterStore<T>& store,
                                           const std::string& prefix,
                                           int x_channels, int g_channels,
                                           Rng& rng);

/// Same-padded convolution with the layer's kernel size.
template <typename T>
Var<T> conv_layer(Tape<T>& tape, const Var<T>& x, const ConvParams<T>& p);

/// relu(batchnorm(conv3x3(x))).
template <typename T>
Var<T> cbr_block(Tape<T>& tape, const Var<T>& x, const CbrParams<T>& p,
                 Mode mode);

/// x0 = relu(BN(w_f*u + b)); x_s = relu(BN(w_f*u + w_r[s]*x_{s-1} + b)).
/// The feedforward term is evaluated once and reused by every step. When
/// `trace` is set it receives x0..x_t.
template <typename T>
Var<T> rcl_block(Tape<T>& tape, const Var<T>& u, const RclParams<T>& p,
                 Mode mode, std::vector<Var<T>>* trace = nullptr);

/// One recurrence step s >= 1 given the feedforward term and x_{s-1}.
template <typename T>
Var<T> rcl_step(Tape<T>& tape, const Var<T>& feedforward, const Var<T>& prev,
                const RclParams<T>& p, int step, Mode mode);

/// conv1x1(s0) + s2.
template <typename T>
Var<T> residual_wrap(Tape<T>& tape, const Var<T>& s0, const Var<T>& s2,
                     const ResidualParams<T>& p);

/// x * sigmoid(psi(relu(theta_x(x) + phi_g(g) + b_g)) + b_psi). `alpha`
/// receives the single-channel coefficient map when non-null.
template <typename T>
Var<T> attention_gate(Tape<T>& tape, const Var<T>& x, const Var<T>& g,
                      const AttentionGateParams<T>& p, Var<T>* alpha = nullptr);

}  // namespace swunet
