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

#include "swunet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "swunet/checkpoint.hpp"
#include "swunet/errors.hpp"
#include "swunet/image_io.hpp"

namespace swunet {

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, AdamConfig config) {
  if (!(config.lr >= 0) || !(config.beta1 >= 0 && config.beta1 < 1) ||
      !(config.beta2 >= 0 && config.beta2 < 1) || !(config.epsilon > 0)) {
    throw ConfigError("invalid Adam hyper-parameters");
  }
  AdamState<T> s;
  s.config = config;
  for (const auto* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  if (params.size() != state.m.size()) {
    throw ArgumentError("Adam state tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double lr_t =
      c.lr * std::sqrt(1.0 - std::pow(c.beta2, t)) / (1.0 - std::pow(c.beta1, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (!p.trainable) continue;
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (m.size() != value.size()) throw ShapeError("Adam state shape mismatch for " + p.name);
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      value[k] = static_cast<T>(value[k] - lr_t * mk / (std::sqrt(vk) + c.epsilon));
    }
  }
}

template <typename T>
std::vector<Parameter<T>*> trainable_parameters(ParameterStore<T>& store) {
  std::vector<Parameter<T>*> out;
  for (const auto& p : store.entries()) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

double plateau_update(PlateauState& s, double val_loss) {
  if (val_loss <= s.best - s.min_delta) {
    s.best = val_loss;
    s.epochs_since_improvement = 0;
    return s.lr;
  }
  ++s.epochs_since_improvement;
  if (s.epochs_since_improvement > s.patience) {
    s.lr = std::max(s.lr * s.factor, s.min_lr);
    s.epochs_since_improvement = 0;
  }
  return s.lr;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split) {
  std::vector<Sample> out;
  for (const auto& r : manifest.split(split)) {
    const auto where = manifest.source.string() + ":" + std::to_string(r.line) + ": ";
    GrayImage img, gt;
    try {
      img = read_png(r.image);
      gt = read_png(r.mask);
    } catch (const NotFoundError& e) {
      throw DataError(where + e.what());
    }
    if (img.width != gt.width || img.height != gt.height) {
      throw DataError(where + "mask " + r.mask.string() + " is " + std::to_string(gt.width) +
                      "x" + std::to_string(gt.height) + ", image is " +
                      std::to_string(img.width) + "x" + std::to_string(img.height));
    }
    out.push_back({r.image.string(), r.category, normalize<float>(img), binarize(gt)});
  }
  return out;
}

void TrainRun::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(plateau_factor > 0 && plateau_factor < 1)) {
    throw ConfigError("plateau factor must lie in (0, 1)");
  }
  if (plateau_patience < 0) throw ConfigError("plateau patience must be >= 0");
  if (!(min_lr >= 0)) throw ConfigError("minimum learning rate must be >= 0");
  if (patch < 1 || overlap < 0 || overlap >= patch) {
    throw ConfigError("patch size must exceed the overlap");
  }
  loss.validate();
}

namespace {

struct PatchPair {
  Tensor<float> image;
  Tensor<float> target;
};

std::vector<PatchPair> cut_patches(std::span<const Sample> samples, int classes,
                                   int patch, int overlap) {
  std::vector<PatchPair> out;
  for (const auto& s : samples) {
    const PatchGrid grid = plan_patches(s.image.w(), s.image.h(), patch, overlap);
    auto images = extract_patches(s.image, grid);
    auto targets = extract_patches(one_hot<float>(s.mask, classes), grid);
    for (std::size_t i = 0; i < images.size(); ++i) {
      out.push_back({std::move(images[i]), std::move(targets[i])});
    }
  }
  return out;
}

Tensor<float> stack(const std::vector<const Tensor<float>*>& items) {
  const Shape s = items.front()->shape();
  Tensor<float> out(static_cast<int>(items.size()), s.c, s.h, s.w);
  float* dst = out.raw();
  for (const auto* t : items) dst = std::copy(t->raw(), t->raw() + t->size(), dst);
  return out;
}

void check_patch(const SwitchConfig& cfg, int patch) {
  const int unit = 1 << (cfg.depth() - 1);
  if (patch % unit != 0) {
    throw ConfigError("patch size " + std::to_string(patch) +
                      " must be divisible by " + std::to_string(unit));
  }
}

void check_samples(std::span<const Sample> samples, int channels, const char* what) {
  for (const auto& s : samples) {
    if (s.image.n() != 1 || s.image.c() != channels) {
      throw ShapeError(std::string(what) + " sample " + s.id + " has shape " +
                       s.image.shape().str());
    }
    if (s.mask.width != s.image.w() || s.mask.height != s.image.h()) {
      throw ShapeError(std::string(what) + " sample " + s.id +
                       ": mask size differs from image size");
    }
  }
}

int argmax_at(const Tensor<float>& t, int n, std::size_t i) {
  int best = 0;
  for (int c = 1; c < t.shape().c; ++c) {
    if (t.plane(n, c)[i] > t.plane(n, best)[i]) best = c;
  }
  return best;
}

// Foreground counts of a training batch, as a fit-time metric would see them.
void tally_batch(const Tensor<float>& probs, const Tensor<float>& target, ConfusionCounts& c) {
  const Shape s = probs.shape();
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      const bool p = argmax_at(probs, n, i) == 1, y = argmax_at(target, n, i) == 1;
      if (p && y) ++c.tp;
      else if (p) ++c.fp;
      else if (y) ++c.fn;
      else ++c.tn;
    }
  }
}

double mean_loss(Network<float>& net, const std::vector<PatchPair>& patches,
                 const LossWeights& weights) {
  double total = 0;
  for (const auto& p : patches) {
    Tape<float> tape(false);
    auto probs = net.forward(tape, tape.constant(p.image), Mode::kInfer);
    total += hybrid_loss(tape, probs, p.target, weights)->value[0];
  }
  return patches.empty() ? 0.0 : total / static_cast<double>(patches.size());
}

}  // namespace

TrainResult train(Network<float>& net, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainRun& run,
                  const EpochCallback& on_epoch) {
  run.validate();
  const SwitchConfig& cfg = net.config();
  check_patch(cfg, run.patch);
  if (train_set.empty()) throw DataError("training split is empty");
  if (val_set.empty()) throw DataError("validation split is empty");
  check_samples(train_set, cfg.input_channels, "training");
  check_samples(val_set, cfg.input_channels, "validation");
  if (!run.checkpoint_dir.empty()) std::filesystem::create_directories(run.checkpoint_dir);

  const auto train_patches = cut_patches(train_set, cfg.num_classes, run.patch, run.overlap);
  const auto val_patches = cut_patches(val_set, cfg.num_classes, run.patch, run.overlap);

  auto params = trainable_parameters(net.store());
  AdamState<float> adam = make_adam_state<float>(params, run.adam);
  PlateauState plateau;
  plateau.lr = run.adam.lr;
  plateau.factor = run.plateau_factor;
  plateau.patience = run.plateau_patience;
  plateau.min_lr = run.min_lr;

  Rng rng(run.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(train_patches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  net.store().zero_grad();
  for (int epoch = 1; epoch <= run.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double loss_sum = 0;
    std::size_t batches = 0;
    ConfusionCounts seen;
    bool stop = false;
    for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
      const std::size_t end = std::min(order.size(), start + run.batch_size);
      std::vector<const Tensor<float>*> xs, ys;
      for (std::size_t k = start; k < end; ++k) {
        xs.push_back(&train_patches[order[k]].image);
        ys.push_back(&train_patches[order[k]].target);
      }
      Tape<float> tape;
      auto probs = net.forward(tape, tape.constant(stack(xs)), Mode::kTrain);
      const Tensor<float> target = stack(ys);
      auto loss = hybrid_loss(tape, probs, target, run.loss);
      const double value = loss->value[0];
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(result.steps + 1));
      }
      tally_batch(probs->value, target, seen);
      tape.backward(loss);
      adam_step<float>(params, adam);
      net.store().zero_grad();
      loss_sum += value;
      ++batches;
      ++result.steps;
      if (run.max_steps != 0 && result.steps >= run.max_steps) {
        stop = true;
        break;
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(batches);
    row.train_dice = metrics(seen).dice;
    row.val_loss = mean_loss(net, val_patches, run.loss);
    if (!std::isfinite(row.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    row.val_dice = evaluate(net, val_set, run.patch, run.overlap).categories.overall.dice;
    row.lr = adam.config.lr;
    adam.config.lr = plateau_update(plateau, row.val_loss);

    if (!run.checkpoint_dir.empty()) {
      save_weights(net.store(), run.checkpoint_dir / "last.ckpt");
    }
    if (row.val_dice > result.best_val_dice) {
      result.best_val_dice = row.val_dice;
      result.best_epoch = epoch;
      if (!run.checkpoint_dir.empty()) {
        save_weights(net.store(), run.checkpoint_dir / "best.ckpt");
      }
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
    if (stop) break;
  }
  return result;
}

TrainOutput train(const SwitchConfig& cfg, const DatasetManifest& data,
                  const TrainRun& run, const EpochCallback& on_epoch) {
  cfg.validate();
  run.validate();
  check_patch(cfg, run.patch);
  const auto train_set = load_samples(data, Split::kTrain);
  const auto val_set = load_samples(data, Split::kVal);
  TrainOutput out{Network<float>::build(cfg, run.seed), {}};
  out.result = train(out.network, train_set, val_set, run, on_epoch);
  return out;
}

std::string format_log(std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,val_loss,val_dice,lr\n";
  char line[160];
  for (const auto& r : log) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                  r.val_loss, r.val_dice, r.lr);
    out += line;
  }
  return out;
}

Tensor<float> predict_probabilities(Network<float>& net, const Tensor<float>& image,
                                    int patch, int overlap) {
  check_patch(net.config(), patch);
  const PatchGrid grid = plan_patches(image.w(), image.h(), patch, overlap);
  std::vector<Tensor<float>> outputs;
  for (const auto& p : extract_patches(image, grid)) outputs.push_back(net.predict(p));
  return stitch<float>(outputs, grid);
}

Mask predict_mask(Network<float>& net, const Tensor<float>& image, int patch,
                  int overlap) {
  return argmax_channels(predict_probabilities(net, image, patch, overlap));
}

Evaluation evaluate_predictions(std::span<const Sample> samples,
                                std::span<const Mask> predictions) {
  if (samples.size() != predictions.size()) {
    throw ArgumentError("got " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(samples.size()) + " samples");
  }
  Evaluation ev;
  std::vector<CategorizedReport> items;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ImageResult r;
    r.id = samples[i].id;
    r.category = samples[i].category;
    r.counts = confusion_counts(predictions[i], samples[i].mask);
    r.report = metrics(r.counts);
    items.push_back({r.report, r.category});
    ev.images.push_back(std::move(r));
  }
  ev.categories = aggregate_by_category(items);
  for (int m = 0; m < kMetricCount; ++m) {
    std::vector<double> values;
    for (const auto& r : ev.images) values.push_back(metric_value(r.report, m));
    ev.boxplots[m] = boxplot_stats(values);
  }
  return ev;
}

Evaluation evaluate(Network<float>& net, std::span<const Sample> samples, int patch,
                    int overlap) {
  if (samples.empty()) throw ArgumentError("nothing to evaluate");
  check_samples(samples, net.config().input_channels, "evaluation");
  std::vector<Mask> predictions;
  for (const auto& s : samples) predictions.push_back(predict_mask(net, s.image, patch, overlap));
  return evaluate_predictions(samples, predictions);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  for (int m = 0; m < kMetricCount; ++m) j[metric_names()[m]] = metric_value(r, m);
  return j;
}

}  // namespace

void write_evaluation(const Evaluation& ev, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& names = metric_names();

  std::string per_image = "image,category";
  for (const auto& n : names) per_image += "," + n;
  per_image += "\n";
  for (const auto& r : ev.images) {
    per_image += quote_csv(r.id) + "," + std::to_string(r.category);
    for (int m = 0; m < kMetricCount; ++m) per_image += "," + fmt(metric_value(r.report, m));
    per_image += "\n";
  }
  write_text(dir / "per_image.csv", per_image);

  // One column per category, one row per metric.
  std::string table = "metric";
  for (const auto& [cat, _] : ev.categories.per_category) table += "," + std::to_string(cat);
  table += "\n";
  for (int m = 0; m < kMetricCount; ++m) {
    table += names[m];
    for (const auto& [_, rep] : ev.categories.per_category) table += "," + fmt(metric_value(rep, m));
    table += "\n";
  }
  table += "images";
  for (const auto& [_, n] : ev.categories.image_counts) table += "," + std::to_string(n);
  table += "\n";
  write_text(dir / "categories.csv", table);

  std::string summary;
  for (int m = 0; m < kMetricCount; ++m) summary += (m ? "," : "") + names[m];
  summary += "\n";
  for (int m = 0; m < kMetricCount; ++m) {
    summary += (m ? "," : "") + fmt(metric_value(ev.categories.overall, m));
  }
  summary += "\n";
  write_text(dir / "summary.csv", summary);

  nlohmann::ordered_json js;
  js["images"] = ev.categories.images;
  js["overall"] = report_json(ev.categories.overall);
  auto& cats = js["categories"] = nlohmann::ordered_json::object();
  for (const auto& [cat, rep] : ev.categories.per_category) {
    auto entry = report_json(rep);
    entry["images"] = ev.categories.image_counts.at(cat);
    cats[std::to_string(cat)] = entry;
  }
  write_text(dir / "summary.json", js.dump(2) + "\n");

  nlohmann::ordered_json jb;
  for (int m = 0; m < kMetricCount; ++m) {
    const BoxplotStats& b = ev.boxplots[m];
    jb[names[m]] = {{"min", b.min},
                    {"q1", b.q1},
                    {"median", b.median},
                    {"q3", b.q3},
                    {"max", b.max},
                    {"mean", b.mean},
                    {"lower_whisker", b.lower_whisker},
                    {"upper_whisker", b.upper_whisker},
                    {"outliers", b.outliers}};
  }
  write_text(dir / "boxplot.json", jb.dump(2) + "\n");
}

#define SWUNET_INSTANTIATE_TRAINER(T)                                                 \
  template AdamState<T> make_adam_state<T>(std::span<Parameter<T>* const>, AdamConfig); \
  template void adam_step<T>(std::span<Parameter<T>* const>, AdamState<T>&);          \
  template std::vector<Parameter<T>*> trainable_parameters<T>(ParameterStore<T>&);

SWUNET_INSTANTIATE_TRAINER(float)
SWUNET_INSTANTIATE_TRAINER(double)

}  // namespace swunet
