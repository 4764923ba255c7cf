// src/grad_check.cc

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

#include "eend/grad_check.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "eend/error.h"

namespace eend {
namespace {

double evaluate(const ScalarObjective& f) {
  Graph g;
  const Var out = f(g);
  if (out.value().size() != 1)
    throw DimensionError("grad_check objective must be scalar");
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw EvaluationError("objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f,
                           const std::vector<Tensor*>& params, double step,
                           double abs_floor) {
  if (!(step >= 1e-6 && step <= 1e-4))
    throw ConfigError("grad_check step must lie in [1e-6, 1e-4], got " +
                      std::to_string(step));
  for (Tensor* p : params) {
    if (!p->requires_grad()) p->set_requires_grad(true);
    p->zero_grad();
  }
  {
    Graph g;
    const Var out = f(g);
    if (!std::isfinite(out.value()[0]))
      throw EvaluationError("objective is not finite");
    g.backward(out);
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + step;
      const double up = evaluate(f);
      p[i] = saved - step;
      const double down = evaluate(f);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p.grad()[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), abs_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = pi;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace eend
