// include/eend/ops.h

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

#ifndef EEND_OPS_H_
#define EEND_OPS_H_

// Differentiable tensor ops recorded on a Graph.
//
// Shapes must match exactly; the only broadcast is add_row (a length-n row
// vector added to every row of an m x n matrix). Violations throw
// DimensionError.

#include <cstddef>
#include <vector>

#include "eend/graph.h"
#include "eend/tensor.h"

namespace eend {

// Values fed to the logarithm of a cross entropy are clamped to
// [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;
inline constexpr double kLayerNormEps = 1e-5;

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& x);

Var add(const Var& a, const Var& b);
Var add_row(const Var& x, const Var& row);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

Var relu(const Var& x);
Var sigmoid(const Var& x);
// Throws DomainError on any non-positive entry.
Var log(const Var& x);
Var square(const Var& x);

enum class Elementwise { kRelu, kSigmoid, kAdd, kScale, kLog, kSquare };
// Uniform entry point; `other` is used by kAdd, `factor` by kScale.
Var elementwise(Elementwise kind, const Var& x, const Var* other = nullptr,
                double factor = 1.0);

Var softmax_rows(const Var& x);
// Per-row normalization with population variance, then gain * x + bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               double eps = kLayerNormEps);

// Rank-0-like scalars are stored as shape {1}.
Var sum(const Var& x);
Var mean(const Var& x);

Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);

// mean over entries of H(target, clamp(pred)), target held constant.
Var bce_mean(const Var& pred, const Tensor& target);
// mean over entries of (target - pred)^2, target held constant.
Var mse_mean(const Var& pred, const Tensor& target);

// Plain-value forms shared by the ops and by selection logic that must not
// touch the tape.
double clamp_prob(double p);
double bce(double target, double pred);
double bce_mean_value(const Tensor& pred, const Tensor& target);
double mse_mean_value(const Tensor& pred, const Tensor& target);
Tensor matmul_value(const Tensor& a, const Tensor& b);

}  // namespace eend

#endif  // EEND_OPS_H_
