// include/eend/simulator.h

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

#ifndef EEND_SIMULATOR_H_
#define EEND_SIMULATOR_H_

// Synthetic two-speaker conversations.
//
// Labels come from a segment scheduler working at the raw 10 ms frame rate.
// Each conversation draws one unit-norm mean vector per speaker; a frame's
// feature is the sum of the active speakers' means plus isotropic Gaussian
// noise. The model input is then produced by splicing neighbour frames and
// subsampling, in that order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eend/tensor.h"

namespace eend {

struct ConversationSpec {
  std::size_t num_speakers = 2;
  std::size_t num_frames_raw = 2000;
  double target_overlap_ratio = 0.344;
  double silence_ratio = 0.1;
  std::size_t base_feature_dim = 23;
  double noise_sigma = 0.3;
  std::size_t min_segment = 10;
  std::size_t max_segment = 40;
  std::size_t context = 7;
  std::size_t subsample = 10;
  double frame_shift_s = 0.01;
  std::uint64_t seed = 0;

  std::size_t feature_dim() const { return base_feature_dim * (2 * context + 1); }
  std::size_t num_frames() const {
    return (num_frames_raw + subsample - 1) / subsample;
  }
  double frame_duration_s() const { return frame_shift_s * static_cast<double>(subsample); }

  // Throws SpecError when the ratios cannot be realized.
  void validate() const;
};

// Derives an independent 64-bit seed for a numbered stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Raw-rate T_raw x S binary activity matrix.
Tensor generate_labels(const ConversationSpec& spec);

// T_raw x F0 features for the given raw labels.
Tensor render_features(const Tensor& labels, const ConversationSpec& spec);

// The per-conversation speaker mean vectors used by render_features
// (S x F0, unit-norm rows).
Tensor speaker_means(const ConversationSpec& spec);

// Row t of the result is rows t-context .. t+context concatenated, with the
// boundary rows repeated past either end.
Tensor splice(const Tensor& features, std::size_t context);

// Keeps rows 0, factor, 2*factor, ...
Tensor subsample_rows(const Tensor& matrix, std::size_t factor);

struct SubsampledPair {
  Tensor features;
  Tensor labels;
};
SubsampledPair subsample(const Tensor& features, const Tensor& labels,
                         std::size_t factor);

// Frames with >= 2 active speakers over frames with >= 1 (0 if no speech).
double overlap_ratio(const Tensor& labels);
// Frames with no active speaker over all frames.
double silence_fraction(const Tensor& labels);

struct Conversation {
  std::string id;
  Tensor features;  // T x F, post splice + subsample
  Tensor labels;    // T x S
  double frame_duration_s = 0.1;
};

// Full pipeline: labels, rendering, splice, subsample.
Conversation make_conversation(const ConversationSpec& spec,
                               std::string id = {});

void write_conversation(const std::filesystem::path& path,
                        const Conversation& conv);
Conversation read_conversation(const std::filesystem::path& path);

}  // namespace eend

#endif  // EEND_SIMULATOR_H_
