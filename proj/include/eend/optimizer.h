// include/eend/optimizer.h

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

#ifndef EEND_OPTIMIZER_H_
#define EEND_OPTIMIZER_H_

#include <cstddef>
#include <vector>

#include "eend/tensor.h"

namespace eend {

// factor * D^-0.5 * min(step^-0.5, step * warmup^-1.5), step counted from 1.
struct NoamSchedule {
  double factor = 1.0;
  std::size_t model_dim = 64;
  std::size_t warmup = 1000;

  double rate(std::size_t step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

// Adam with bias correction over a fixed list of parameter tensors; reads
// each tensor's grad().
class Adam {
 public:
  Adam(AdamConfig config, std::vector<Tensor*> params);

  void step(double learning_rate);
  std::size_t steps() const { return steps_; }

  // Moment buffers, one per parameter, for checkpointing.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_steps(std::size_t steps) { steps_ = steps; }

 private:
  AdamConfig config_;
  std::vector<Tensor*> params_;
  std::vector<Tensor> m_, v_;
  std::size_t steps_ = 0;
};

}  // namespace eend

#endif  // EEND_OPTIMIZER_H_
