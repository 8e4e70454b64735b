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

#ifndef SWUNET_H_
#define SWUNET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SWUNET_BUILDING_LIBRARY)
#define SWU_API __attribute__((visibility("default")))
#else
#define SWU_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum swu_status {
  SWU_OK = 0,
  SWU_E_ARGUMENT = 1,
  SWU_E_SHAPE = 2,
  SWU_E_CONFIG = 3,
  SWU_E_CHECKPOINT = 4,
  SWU_E_DATA = 5,
  SWU_E_NOT_FOUND = 6,
  SWU_E_IO = 7,
  SWU_E_NUMERIC = 8,
  SWU_E_INTERNAL = 99
} swu_status;

typedef struct swu_network swu_network;

/* Message of the last failed call on this thread; never NULL. */
SWU_API const char* swu_last_error(void);
SWU_API const char* swu_status_name(swu_status status);
/* Newline-separated preset names. */
SWU_API const char* swu_model_names(void);

SWU_API swu_status swu_network_from_model(const char* name, uint64_t seed,
                                          swu_network** out);
/* Builds the network described by a run config (JSON text). Relative paths
 * in the config resolve against base_dir (may be NULL). */
SWU_API swu_status swu_network_from_config(const char* json, const char* base_dir,
                                           swu_network** out);
SWU_API void swu_network_destroy(swu_network* net);

SWU_API swu_status swu_network_param_count(const swu_network* net, uint64_t* out);
SWU_API swu_status swu_network_depth(const swu_network* net, int* out);
SWU_API swu_status swu_network_num_classes(const swu_network* net, int* out);
/* Per-layer table for an h x w input; release with swu_free_string. */
SWU_API swu_status swu_network_summary(const swu_network* net, int h, int w, char** text);
SWU_API void swu_free_string(char* text);

SWU_API swu_status swu_network_save(const swu_network* net, const char* path);
/* All-or-nothing; the network is untouched on failure. */
SWU_API swu_status swu_network_load(swu_network* net, const char* path);

/* Inference on an (n, c, h, w) float batch. `output` receives
 * n * num_classes * h * w probabilities. */
SWU_API swu_status swu_network_forward(swu_network* net, const float* input, int n,
                                       int c, int h, int w, float* output,
                                       size_t output_len);

/* Patches, stitches and writes a {0,255} mask PNG of the input's size. */
SWU_API swu_status swu_predict_png(swu_network* net, const char* image_path,
                                   const char* out_path, int patch, int overlap);

/* Writes decoder-<level>.png per decoder level: channel mean, nearest
 * resize to the input size, min-max scaled to 8 bits (flat maps become 0). */
SWU_API swu_status swu_export_features(swu_network* net, const char* image_path,
                                       const char* out_dir, int patch, int overlap,
                                       int* written);

/* Evaluates one split of a manifest and writes per_image.csv, categories.csv,
 * summary.csv, summary.json and boxplot.json into out_dir. */
SWU_API swu_status swu_evaluate(swu_network* net, const char* manifest_path,
                                const char* split, const char* out_dir, int patch,
                                int overlap);

typedef void (*swu_epoch_fn)(int epoch, double train_loss, double val_loss,
                             double val_dice, double lr, void* user);

/* Validates a run config without side effects. need_data != 0 also requires
 * the manifest to exist and an output directory to be set. */
SWU_API swu_status swu_validate_config(const char* json, const char* base_dir,
                                       int need_data);

/* Trains from a run config. Writes config.json, train_log.csv, last.ckpt
 * and best.ckpt into the config's output directory. */
SWU_API swu_status swu_train(const char* json, const char* base_dir,
                             swu_epoch_fn on_epoch, void* user);

#ifdef __cplusplus
}
#endif

#endif  // SWUNET_H_
