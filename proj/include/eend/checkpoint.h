// include/eend/checkpoint.h

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EEND_CHECKPOINT_H_
#define EEND_CHECKPOINT_H_

// Checkpoint files: a plain-text header of "key = value" lines closed by
// "end", followed by named tensors (u32 name length, name bytes, tensor in
// the binary tensor format). Parameters come first in ModelParams::named()
// order; optimizer moments, when present, follow as adam.m.<name> and
// adam.v.<name>.

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <vector>

#include "eend/model.h"
#include "eend/tensor.h"

namespace eend {

// Where training stands, enough to continue exactly where it stopped.
struct TrainProgress {
  std::size_t step = 0;         // optimizer steps taken
  std::size_t epoch = 0;        // epochs completed
  std::size_t batch = 0;        // batches done within the current epoch
  double best_der = std::numeric_limits<double>::infinity();
  double last_der = std::numeric_limits<double>::infinity();
  // running sums of L_d, L_S, L_O, L_total over the current epoch
  std::array<double, 4> epoch_loss{};
  std::size_t epoch_items = 0;
};

struct Checkpoint {
  ModelParams params;
  TrainProgress progress;
  // One entry per parameter when optimizer state is stored, else empty.
  std::vector<Tensor> adam_m, adam_v;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws IoError for malformed files and ConfigError for parameters that do
// not match the stored model configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eend

#endif  // EEND_CHECKPOINT_H_
