// src/metrics.cc

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

#include "eend/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "eend/error.h"
#include "eend/losses.h"

namespace eend {

std::vector<double> median_filter(const std::vector<double>& column,
                                  std::size_t window) {
  if (window % 2 == 0)
    throw ConfigError("median window must be odd, got " + std::to_string(window));
  const auto n = static_cast<std::ptrdiff_t>(column.size());
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> out(column.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    std::ptrdiff_t ones = 0;
    for (std::ptrdiff_t k = t - half; k <= t + half; ++k)
      ones += column[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n - 1))] > 0.5;
    out[static_cast<std::size_t>(t)] = ones > half ? 1.0 : 0.0;
  }
  return out;
}

DiarizationHypothesis postprocess(const Tensor& posteriors, double threshold,
                                  std::size_t window, double frame_duration_s) {
  if (window % 2 == 0)
    throw ConfigError("median window must be odd, got " + std::to_string(window));
  const std::size_t frames = posteriors.rows(), speakers = posteriors.cols();
  DiarizationHypothesis hyp;
  hyp.frame_duration_s = frame_duration_s;
  hyp.decisions = Tensor({frames, speakers});
  std::vector<double> column(frames);
  for (std::size_t s = 0; s < speakers; ++s) {
    for (std::size_t t = 0; t < frames; ++t)
      column[t] = posteriors(t, s) > threshold ? 1.0 : 0.0;
    const std::vector<double> filtered = median_filter(column, window);
    for (std::size_t t = 0; t < frames; ++t) hyp.decisions(t, s) = filtered[t];
  }
  return hyp;
}

DerReport& DerReport::operator+=(const DerReport& other) {
  miss += other.miss;
  false_alarm += other.false_alarm;
  confusion += other.confusion;
  scored_speech += other.scored_speech;
  scored_frames += other.scored_frames;
  return *this;
}

std::vector<bool> scored_frames(const Tensor& reference, double frame_duration_s,
                                double collar_s) {
  const std::size_t frames = reference.rows(), speakers = reference.cols();
  // boundary positions in frame units: b means the edge between frame b-1
  // and frame b
  std::vector<std::size_t> boundaries;
  for (std::size_t b = 0; b <= frames; ++b) {
    bool change = false;
    for (std::size_t s = 0; s < speakers; ++s) {
      const double before = b > 0 ? reference(b - 1, s) : 0.0;
      const double after = b < frames ? reference(b, s) : 0.0;
      change = change || (before != after);
    }
    if (change) boundaries.push_back(b);
  }
  std::vector<bool> scored(frames, true);
  if (collar_s <= 0.0) return scored;
  // tolerance for centres that land exactly on the collar edge
  const double reach = collar_s - 1e-9;
  for (std::size_t b : boundaries)
    for (std::size_t t = 0; t < frames; ++t) {
      const double centre = (static_cast<double>(t) + 0.5) * frame_duration_s;
      if (std::abs(centre - static_cast<double>(b) * frame_duration_s) < reach)
        scored[t] = false;
    }
  return scored;
}

DerReport der(const DiarizationHypothesis& hyp, const Tensor& reference,
              double collar_s) {
  const Tensor& sys = hyp.decisions;
  if (sys.shape() != reference.shape() || sys.rank() != 2)
    throw DimensionError("hypothesis " + shape_string(sys.shape()) +
                         " and reference " + shape_string(reference.shape()) +
                         " differ");
  const std::size_t frames = reference.rows(), speakers = reference.cols();
  const std::vector<bool> scored = scored_frames(reference, hyp.frame_duration_s, collar_s);

  DerReport base;
  for (std::size_t t = 0; t < frames; ++t) {
    if (!scored[t]) continue;
    std::size_t n_ref = 0, n_sys = 0;
    for (std::size_t s = 0; s < speakers; ++s) {
      n_ref += reference(t, s) > 0.5;
      n_sys += sys(t, s) > 0.5;
    }
    ++base.scored_frames;
    base.scored_speech += n_ref;
    base.miss += n_ref > n_sys ? n_ref - n_sys : 0;
    base.false_alarm += n_sys > n_ref ? n_sys - n_ref : 0;
  }
  // only confusion depends on the mapping
  DerReport best;
  bool have_best = false;
  for (const auto& mapping : permutations(speakers)) {
    std::size_t confusion = 0;
    for (std::size_t t = 0; t < frames; ++t) {
      if (!scored[t]) continue;
      std::size_t n_ref = 0, n_sys = 0, n_match = 0;
      for (std::size_t s = 0; s < speakers; ++s) {
        const bool r = reference(t, s) > 0.5;
        n_ref += r;
        n_sys += sys(t, s) > 0.5;
        n_match += r && sys(t, mapping[s]) > 0.5;
      }
      confusion += std::min(n_ref, n_sys) - n_match;
    }
    if (!have_best || confusion < best.confusion) {
      best = base;
      best.confusion = confusion;
      best.mapping = mapping;
      have_best = true;
    }
  }
  return best;
}

}  // namespace eend
