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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "swunet/losses.hpp"
#include "swunet/manifest.hpp"
#include "swunet/metrics.hpp"
#include "swunet/network.hpp"
#include "swunet/patches.hpp"

namespace swunet {

// ---------------------------------------------------------------- Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, AdamConfig config);

/// Bias-corrected Adam with the corrections folded into the step size:
///   p -= lr * sqrt(1 - b2^t) / (1 - b1^t) * m / (sqrt(v) + eps)
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

template <typename T>
std::vector<Parameter<T>*> trainable_parameters(ParameterStore<T>& store);

// ------------------------------------------------------------- plateau

struct PlateauState {
  double lr = 1e-3;
  double factor = 0.1;
  int patience = 5;
  double min_lr = 1e-6;
  double min_delta = 1e-8;
  double best = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
};

/// Records one validation loss and returns the (possibly reduced) rate. The
/// rate drops once the non-improving streak exceeds `patience`.
double plateau_update(PlateauState& state, double val_loss);

// ------------------------------------------------------------- samples

struct Sample {
  std::string id;  // image path as written in the manifest
  int category = 1;
  Tensor<float> image;  // (1,1,h,w), normalised
  Mask mask;            // labels in {0,1}
};

/// Loads and normalises every record of `split`; masks are binarised.
std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split);

// ------------------------------------------------------------ training

struct TrainRun {
  int epochs = 25;
  int batch_size = 2;
  std::uint64_t seed = 0;
  LossWeights loss;
  AdamConfig adam;
  double plateau_factor = 0.1;
  int plateau_patience = 5;
  double min_lr = 1e-6;
  int patch = kDefaultPatch;
  int overlap = kDefaultOverlap;
  std::uint64_t max_steps = 0;  // 0 = no limit
  std::filesystem::path checkpoint_dir;  // empty = no checkpoints

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double train_dice = 0;  // train-mode batches of the epoch; not written to the CSV
  double val_loss = 0;
  double val_dice = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::uint64_t steps = 0;
  int best_epoch = 0;
  double best_val_dice = -1;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains `net` in place. Checkpoints `last.ckpt` every epoch and
/// `best.ckpt` whenever validation dice improves.
TrainResult train(Network<float>& net, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainRun& run,
                  const EpochCallback& on_epoch = {});

struct TrainOutput {
  Network<float> network;
  TrainResult result;
};

TrainOutput train(const SwitchConfig& cfg, const DatasetManifest& data,
                  const TrainRun& run, const EpochCallback& on_epoch = {});

/// `epoch,train_loss,val_loss,val_dice,lr` with a header row.
std::string format_log(std::span<const EpochLog> log);

// ---------------------------------------------------------- evaluation

/// Stitched class probabilities (1,k,h,w) for one normalised image.
Tensor<float> predict_probabilities(Network<float>& net, const Tensor<float>& image,
                                    int patch, int overlap);
Mask predict_mask(Network<float>& net, const Tensor<float>& image, int patch,
                  int overlap);

struct ImageResult {
  std::string id;
  int category = 1;
  ConfusionCounts counts;
  MetricsReport report;
};

struct Evaluation {
  std::vector<ImageResult> images;
  CategoryTable categories;
  std::array<BoxplotStats, kMetricCount> boxplots;  // per metric
};

/// Builds the report from predicted masks aligned with `samples`.
Evaluation evaluate_predictions(std::span<const Sample> samples,
                                std::span<const Mask> predictions);

Evaluation evaluate(Network<float>& net, std::span<const Sample> samples,
                    int patch, int overlap);

/// per_image.csv, categories.csv, summary.csv, summary.json, boxplot.json
void write_evaluation(const Evaluation& eval, const std::filesystem::path& dir);

}  // namespace swunet
