// include/eend/metrics.h

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

#ifndef EEND_METRICS_H_
#define EEND_METRICS_H_

#include <cstddef>
#include <vector>

#include "eend/tensor.h"

namespace eend {

struct DiarizationHypothesis {
  Tensor decisions;  // T x S, entries 0/1
  double frame_duration_s = 0.1;
};

// Threshold each speaker column, then apply a sliding median of odd width
// with the boundary frames repeated. Throws ConfigError for an even window.
DiarizationHypothesis postprocess(const Tensor& posteriors,
                                  double threshold = 0.5,
                                  std::size_t window = 11,
                                  double frame_duration_s = 0.1);

// Binary sliding median over one 0/1 sequence.
std::vector<double> median_filter(const std::vector<double>& column,
                                  std::size_t window);

struct DerReport {
  std::size_t miss = 0;
  std::size_t false_alarm = 0;
  std::size_t confusion = 0;
  std::size_t scored_speech = 0;  // reference speaker-frames in scored frames
  std::size_t scored_frames = 0;
  // hypothesis column mapping[s] is matched to reference speaker s
  std::vector<std::size_t> mapping;

  std::size_t errors() const { return miss + false_alarm + confusion; }
  // Zero when nothing is scored.
  double der() const {
    return scored_speech ? static_cast<double>(errors()) /
                               static_cast<double>(scored_speech)
                         : 0.0;
  }
  DerReport& operator+=(const DerReport& other);
};

// Frames whose centre lies strictly within collar_s of a reference boundary
// (an activity change of any reference speaker, including onsets at the
// first frame and offsets at the last) are not scored.
std::vector<bool> scored_frames(const Tensor& reference, double frame_duration_s,
                                double collar_s);

// Frame-level diarization error under the speaker mapping with the fewest
// errors. Per scored frame with n_ref reference and n_hyp hypothesis
// speakers and n_match correctly mapped ones:
//   miss = max(0, n_ref - n_hyp), false alarm = max(0, n_hyp - n_ref),
//   confusion = min(n_ref, n_hyp) - n_match.
DerReport der(const DiarizationHypothesis& hyp, const Tensor& reference,
              double collar_s = 0.25);

}  // namespace eend

#endif  // EEND_METRICS_H_
