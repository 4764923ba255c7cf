// src/simulator.cc

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

#include "eend/simulator.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "eend/error.h"
#include "eend/tensor_io.h"

namespace eend {
namespace {

// Segment states of the scheduler: who is talking.
enum State : int { kSilence = 0, kFirst = 1, kSecond = 2, kBoth = 3 };

struct Budgets {
  std::array<std::size_t, 4> frames{};
};

Budgets frame_budgets(const ConversationSpec& spec) {
  const double total = static_cast<double>(spec.num_frames_raw);
  Budgets b;
  const auto silence = static_cast<std::size_t>(std::llround(spec.silence_ratio * total));
  const std::size_t speech = spec.num_frames_raw - silence;
  const auto both = static_cast<std::size_t>(
      std::llround(spec.target_overlap_ratio * static_cast<double>(speech)));
  const std::size_t single = speech - both;
  b.frames[kSilence] = silence;
  b.frames[kBoth] = both;
  b.frames[kFirst] = (single + 1) / 2;
  b.frames[kSecond] = single / 2;
  return b;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ConversationSpec::validate() const {
  if (num_speakers != 2)
    throw SpecError("only two-speaker conversations are supported");
  if (num_frames_raw == 0) throw SpecError("num_frames_raw must be positive");
  if (base_feature_dim == 0) throw SpecError("base_feature_dim must be positive");
  if (subsample == 0) throw SpecError("subsample factor must be >= 1");
  if (!(target_overlap_ratio >= 0.0 && target_overlap_ratio < 1.0))
    throw SpecError("target_overlap_ratio must lie in [0, 1)");
  if (!(silence_ratio >= 0.0 && silence_ratio < 1.0))
    throw SpecError("silence_ratio must lie in [0, 1)");
  if (target_overlap_ratio + silence_ratio >= 1.0)
    throw SpecError("target_overlap_ratio + silence_ratio must be < 1");
  if (min_segment == 0 || max_segment < min_segment)
    throw SpecError("segment length range is empty");
  if (!(noise_sigma >= 0.0)) throw SpecError("noise_sigma must be >= 0");
  const Budgets b = frame_budgets(*this);
  for (std::size_t frames : b.frames)
    if (frames > 0 && frames < min_segment)
      throw SpecError("ratios need a segment of " + std::to_string(frames) +
                      " frames, below the minimum segment length " +
                      std::to_string(min_segment));
}

Tensor generate_labels(const ConversationSpec& spec) {
  spec.validate();
  Budgets budget = frame_budgets(spec);
  std::mt19937_64 rng(mix_seed(spec.seed, 0));
  std::uniform_int_distribution<std::size_t> length_dist(spec.min_segment,
                                                         spec.max_segment);

  Tensor labels({spec.num_frames_raw, 2});
  std::size_t t = 0;
  int current = -1;
  auto emit = [&](int state, std::size_t frames) {
    for (std::size_t i = 0; i < frames; ++i, ++t) {
      labels(t, 0) = (state & kFirst) ? 1.0 : 0.0;
      labels(t, 1) = (state & kSecond) ? 1.0 : 0.0;
    }
  };

  while (t < spec.num_frames_raw) {
    // Next state is drawn among the other states with frames left, with
    // probability proportional to what is left.
    std::size_t pool = 0;
    for (int s = 0; s < 4; ++s)
      if (s != current) pool += budget.frames[s];
    if (pool == 0) {
      // only the current state has frames left: lengthen the running segment
      emit(current, budget.frames[current]);
      budget.frames[current] = 0;
      break;
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
    std::size_t draw = pick(rng);
    int next = 0;
    for (int s = 0; s < 4; ++s) {
      if (s == current) continue;
      if (draw < budget.frames[s]) {
        next = s;
        break;
      }
      draw -= budget.frames[s];
    }
    std::size_t& left = budget.frames[next];
    std::size_t frames = std::min(length_dist(rng), left);
    if (left - frames < spec.min_segment) frames = left;
    emit(next, frames);
    left -= frames;
    current = next;
  }
  return labels;
}

Tensor speaker_means(const ConversationSpec& spec) {
  std::mt19937_64 rng(mix_seed(spec.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t s_count = spec.num_speakers, dim = spec.base_feature_dim;
  Tensor means({s_count, dim});
  for (std::size_t s = 0; s < s_count;) {
    double norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      means(s, j) = normal(rng);
      norm += means(s, j) * means(s, j);
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (std::size_t j = 0; j < dim; ++j) means(s, j) /= norm;
    bool collinear = false;
    for (std::size_t r = 0; r < s; ++r) {
      double cosine = 0.0;
      for (std::size_t j = 0; j < dim; ++j) cosine += means(r, j) * means(s, j);
      collinear = collinear || std::abs(cosine) > 0.95;
    }
    // a 1-dimensional space cannot hold two non-collinear directions
    if (!collinear || dim == 1) ++s;
  }
  return means;
}

Tensor render_features(const Tensor& labels, const ConversationSpec& spec) {
  const Tensor means = speaker_means(spec);
  std::mt19937_64 rng(mix_seed(spec.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t frames = labels.rows(), dim = spec.base_feature_dim;
  if (labels.cols() != spec.num_speakers)
    throw DimensionError("label matrix has " + std::to_string(labels.cols()) +
                         " speakers, spec says " +
                         std::to_string(spec.num_speakers));
  Tensor features({frames, dim});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < spec.num_speakers; ++s)
      if (labels(t, s) > 0.5)
        for (std::size_t j = 0; j < dim; ++j) features(t, j) += means(s, j);
    if (spec.noise_sigma > 0.0)
      for (std::size_t j = 0; j < dim; ++j)
        features(t, j) += spec.noise_sigma * normal(rng);
  }
  return features;
}

Tensor splice(const Tensor& features, std::size_t context) {
  const std::size_t frames = features.rows(), dim = features.cols();
  const std::size_t width = dim * (2 * context + 1);
  Tensor out({frames, width});
  const auto last = static_cast<std::ptrdiff_t>(frames) - 1;
  for (std::size_t t = 0; t < frames; ++t) {
    double* dst = out.ptr() + t * width;
    for (std::ptrdiff_t off = -static_cast<std::ptrdiff_t>(context);
         off <= static_cast<std::ptrdiff_t>(context); ++off) {
      const std::ptrdiff_t src =
          std::clamp(static_cast<std::ptrdiff_t>(t) + off, std::ptrdiff_t{0}, last);
      std::copy_n(features.ptr() + src * static_cast<std::ptrdiff_t>(dim), dim, dst);
      dst += dim;
    }
  }
  return out;
}

Tensor subsample_rows(const Tensor& matrix, std::size_t factor) {
  if (factor == 0) throw SpecError("subsample factor must be >= 1");
  const std::size_t frames = matrix.rows(), dim = matrix.cols();
  const std::size_t kept = (frames + factor - 1) / factor;
  Tensor out({kept, dim});
  for (std::size_t i = 0; i < kept; ++i)
    std::copy_n(matrix.ptr() + i * factor * dim, dim, out.ptr() + i * dim);
  return out;
}

SubsampledPair subsample(const Tensor& features, const Tensor& labels,
                         std::size_t factor) {
  if (features.rows() != labels.rows())
    throw DimensionError("features and labels differ in frame count");
  return {subsample_rows(features, factor), subsample_rows(labels, factor)};
}

double overlap_ratio(const Tensor& labels) {
  std::size_t speech = 0, overlap = 0;
  for (std::size_t t = 0; t < labels.rows(); ++t) {
    double active = 0.0;
    for (std::size_t s = 0; s < labels.cols(); ++s) active += labels(t, s);
    if (active >= 1.0) ++speech;
    if (active >= 2.0) ++overlap;
  }
  return speech ? static_cast<double>(overlap) / static_cast<double>(speech) : 0.0;
}

double silence_fraction(const Tensor& labels) {
  std::size_t silent = 0;
  for (std::size_t t = 0; t < labels.rows(); ++t) {
    double active = 0.0;
    for (std::size_t s = 0; s < labels.cols(); ++s) active += labels(t, s);
    if (active < 1.0) ++silent;
  }
  return static_cast<double>(silent) / static_cast<double>(labels.rows());
}

Conversation make_conversation(const ConversationSpec& spec, std::string id) {
  const Tensor raw_labels = generate_labels(spec);
  const Tensor raw_features = render_features(raw_labels, spec);
  SubsampledPair pair =
      subsample(splice(raw_features, spec.context), raw_labels, spec.subsample);
  Conversation conv;
  conv.id = std::move(id);
  conv.features = std::move(pair.features);
  conv.labels = std::move(pair.labels);
  conv.frame_duration_s = spec.frame_duration_s();
  return conv;
}

void write_conversation(const std::filesystem::path& path,
                        const Conversation& conv) {
  const Tensor header = Tensor::vector(
      {static_cast<double>(conv.features.rows()),
       static_cast<double>(conv.features.cols()),
       static_cast<double>(conv.labels.cols()), conv.frame_duration_s});
  write_tensors(path, {header, conv.features, conv.labels});
}

Conversation read_conversation(const std::filesystem::path& path) {
  std::vector<Tensor> parts = read_tensors(path);
  if (parts.size() != 3 || parts[0].size() != 4)
    throw IoError(path.string() + ": not a conversation file");
  const Tensor& header = parts[0];
  Conversation conv;
  conv.id = path.stem().string();
  conv.features = std::move(parts[1]);
  conv.labels = std::move(parts[2]);
  conv.frame_duration_s = header[3];
  if (conv.features.rank() != 2 || conv.labels.rank() != 2 ||
      static_cast<double>(conv.features.rows()) != header[0] ||
      static_cast<double>(conv.features.cols()) != header[1] ||
      static_cast<double>(conv.labels.cols()) != header[2] ||
      conv.labels.rows() != conv.features.rows())
    throw IoError(path.string() + ": header does not match tensor blocks");
  return conv;
}

}  // namespace eend
