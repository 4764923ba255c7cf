// include/eend/grad_check.h

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

#ifndef EEND_GRAD_CHECK_H_
#define EEND_GRAD_CHECK_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "eend/graph.h"
#include "eend/tensor.h"

namespace eend {

// Builds a scalar objective on a fresh graph. Parameters are bound with
// Graph::parameter so perturbations of the tensors are visible.
using ScalarObjective = std::function<Var(Graph&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Central-difference check of every entry of every parameter. The relative
// error of an entry is |g - n| / max(|g|, |n|, abs_floor); abs_floor keeps
// entries whose true gradient is (near) zero from dividing by noise.
// `step` must lie in [1e-6, 1e-4]. Parameter grads are left holding the
// reverse-mode gradient.
GradCheckResult grad_check(const ScalarObjective& f,
                           const std::vector<Tensor*>& params,
                           double step = 1e-5, double abs_floor = 1e-8);

}  // namespace eend

#endif  // EEND_GRAD_CHECK_H_
