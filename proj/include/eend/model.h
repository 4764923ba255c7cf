// include/eend/model.h

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

#ifndef EEND_MODEL_H_
#define EEND_MODEL_H_

// Self-attentive EEND: input projection + LN, a stack of post-LN transformer
// encoder blocks, and a sigmoid posterior head. There is no positional term,
// so the network is equivariant to permutations of the input frames.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eend/graph.h"
#include "eend/tensor.h"

namespace eend {

struct ModelConfig {
  std::size_t blocks = 4;       // P
  std::size_t heads = 4;        // H
  std::size_t model_dim = 64;   // D
  std::size_t ff_dim = 256;
  std::size_t input_dim = 345;  // F
  std::size_t speakers = 2;     // S

  std::size_t head_dim() const { return model_dim / heads; }
  // Throws ConfigError.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct EncoderBlockParams {
  // per head, D x d
  std::vector<Tensor> w_query, w_key, w_value;
  Tensor w_out, b_out;  // D x D, 1 x D
  Tensor ln1_gain, ln1_bias;
  Tensor w_ff1, b_ff1;  // D x d_ff
  Tensor w_ff2, b_ff2;  // d_ff x D
  Tensor ln2_gain, ln2_bias;
};

struct ModelParams {
  ModelConfig config;
  Tensor w_in, b_in;  // F x D
  Tensor ln_in_gain, ln_in_bias;
  std::vector<EncoderBlockParams> blocks;
  Tensor ln_out_gain, ln_out_bias;
  Tensor w_head, b_head;  // D x S

  // Every parameter tensor in a fixed order with a stable name.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> all();
  std::size_t num_values() const;

  void set_requires_grad(bool flag);
  void zero_grad();
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0, LN gains 1.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Graph-level outputs of one forward pass.
struct BlockOutput {
  Var embeddings;             // T x D
  std::vector<Var> attention; // H of T x T
};

struct ModelOutput {
  Var posteriors;               // T x S
  std::vector<Var> embeddings;  // E^0 .. E^P
  // attention[p][h] for block p (0-based)
  std::vector<std::vector<Var>> attention;
};

// P x H x T x T attention weights copied off the tape.
struct AttentionTensor {
  std::size_t blocks = 0, heads = 0, frames = 0;
  std::vector<Tensor> weights;  // blocks * heads, row-major over (p, h)

  const Tensor& at(std::size_t block, std::size_t head) const {
    return weights[block * heads + head];
  }
};
AttentionTensor collect_attention(const ModelOutput& out);

Var embed_input(Graph& g, ModelParams& params, const Tensor& features);
BlockOutput encoder_block(const Var& input, EncoderBlockParams& params,
                          std::size_t heads);
ModelOutput forward(Graph& g, ModelParams& params, const Tensor& features);

}  // namespace eend

#endif  // EEND_MODEL_H_
