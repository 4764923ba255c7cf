// src/model.cc

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

#include "eend/model.h"

#include <cmath>
#include <random>
#include <string>

#include "eend/error.h"
#include "eend/ops.h"

namespace eend {
namespace {

Tensor uniform_weight(std::mt19937_64& rng, std::size_t fan_in,
                      std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({fan_in, fan_out});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

Tensor row(std::size_t n, double fill) { return Tensor({1, n}, fill); }

}  // namespace

void ModelConfig::validate() const {
  if (blocks == 0 || heads == 0 || model_dim == 0 || ff_dim == 0 ||
      input_dim == 0 || speakers == 0)
    throw ConfigError("model dimensions must be positive");
  if (model_dim % heads != 0)
    throw ConfigError("model_dim " + std::to_string(model_dim) +
                      " is not divisible by heads " + std::to_string(heads));
  if (model_dim < 2) throw ConfigError("model_dim must be >= 2 for layer norm");
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("input.weight", &w_in);
  out.emplace_back("input.bias", &b_in);
  out.emplace_back("input.ln.gain", &ln_in_gain);
  out.emplace_back("input.ln.bias", &ln_in_bias);
  for (std::size_t p = 0; p < blocks.size(); ++p) {
    EncoderBlockParams& b = blocks[p];
    const std::string prefix = "block" + std::to_string(p + 1) + ".";
    for (std::size_t h = 0; h < b.w_query.size(); ++h) {
      const std::string head = prefix + "head" + std::to_string(h + 1) + ".";
      out.emplace_back(head + "query", &b.w_query[h]);
      out.emplace_back(head + "key", &b.w_key[h]);
      out.emplace_back(head + "value", &b.w_value[h]);
    }
    out.emplace_back(prefix + "attn_out.weight", &b.w_out);
    out.emplace_back(prefix + "attn_out.bias", &b.b_out);
    out.emplace_back(prefix + "ln1.gain", &b.ln1_gain);
    out.emplace_back(prefix + "ln1.bias", &b.ln1_bias);
    out.emplace_back(prefix + "ff1.weight", &b.w_ff1);
    out.emplace_back(prefix + "ff1.bias", &b.b_ff1);
    out.emplace_back(prefix + "ff2.weight", &b.w_ff2);
    out.emplace_back(prefix + "ff2.bias", &b.b_ff2);
    out.emplace_back(prefix + "ln2.gain", &b.ln2_gain);
    out.emplace_back(prefix + "ln2.bias", &b.ln2_bias);
  }
  out.emplace_back("output.ln.gain", &ln_out_gain);
  out.emplace_back("output.ln.bias", &ln_out_bias);
  out.emplace_back("output.weight", &w_head);
  out.emplace_back("output.bias", &b_head);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named())
    out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> ModelParams::all() {
  std::vector<Tensor*> out;
  for (auto& entry : named()) out.push_back(entry.second);
  return out;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for (const auto& entry : named()) n += entry.second->size();
  return n;
}

void ModelParams::set_requires_grad(bool flag) {
  for (Tensor* t : all()) t->set_requires_grad(flag);
}

void ModelParams::zero_grad() {
  for (Tensor* t : all()) t->zero_grad();
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d_model = config.model_dim, d_head = config.head_dim();
  ModelParams params;
  params.config = config;
  params.w_in = uniform_weight(rng, config.input_dim, d_model);
  params.b_in = row(d_model, 0.0);
  params.ln_in_gain = row(d_model, 1.0);
  params.ln_in_bias = row(d_model, 0.0);
  for (std::size_t p = 0; p < config.blocks; ++p) {
    EncoderBlockParams b;
    for (std::size_t h = 0; h < config.heads; ++h) {
      b.w_query.push_back(uniform_weight(rng, d_model, d_head));
      b.w_key.push_back(uniform_weight(rng, d_model, d_head));
      b.w_value.push_back(uniform_weight(rng, d_model, d_head));
    }
    b.w_out = uniform_weight(rng, d_model, d_model);
    b.b_out = row(d_model, 0.0);
    b.ln1_gain = row(d_model, 1.0);
    b.ln1_bias = row(d_model, 0.0);
    b.w_ff1 = uniform_weight(rng, d_model, config.ff_dim);
    b.b_ff1 = row(config.ff_dim, 0.0);
    b.w_ff2 = uniform_weight(rng, config.ff_dim, d_model);
    b.b_ff2 = row(d_model, 0.0);
    b.ln2_gain = row(d_model, 1.0);
    b.ln2_bias = row(d_model, 0.0);
    params.blocks.push_back(std::move(b));
  }
  params.ln_out_gain = row(d_model, 1.0);
  params.ln_out_bias = row(d_model, 0.0);
  params.w_head = uniform_weight(rng, d_model, config.speakers);
  params.b_head = row(config.speakers, 0.0);
  return params;
}

Var embed_input(Graph& g, ModelParams& params, const Tensor& features) {
  if (features.rank() != 2 || features.cols() != params.config.input_dim)
    throw DimensionError("input features " + shape_string(features.shape()) +
                         " do not match model input dim " +
                         std::to_string(params.config.input_dim));
  const Var x = g.constant(features);
  const Var projected =
      add_row(matmul(x, g.parameter(params.w_in)), g.parameter(params.b_in));
  return layer_norm(projected, g.parameter(params.ln_in_gain),
                    g.parameter(params.ln_in_bias));
}

BlockOutput encoder_block(const Var& input, EncoderBlockParams& params,
                          std::size_t heads) {
  Graph& g = input.graph();
  const std::size_t d_head = params.w_query.front().cols();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d_head));
  BlockOutput out;
  std::vector<Var> head_outputs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var q = matmul(input, g.parameter(params.w_query[h]));
    const Var k = matmul(input, g.parameter(params.w_key[h]));
    const Var v = matmul(input, g.parameter(params.w_value[h]));
    const Var weights = softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d));
    out.attention.push_back(weights);
    head_outputs.push_back(matmul(weights, v));
  }
  const Var attended =
      add_row(matmul(concat_cols(head_outputs), g.parameter(params.w_out)),
              g.parameter(params.b_out));
  const Var mid = layer_norm(add(input, attended), g.parameter(params.ln1_gain),
                             g.parameter(params.ln1_bias));
  const Var hidden =
      relu(add_row(matmul(mid, g.parameter(params.w_ff1)), g.parameter(params.b_ff1)));
  const Var ff =
      add_row(matmul(hidden, g.parameter(params.w_ff2)), g.parameter(params.b_ff2));
  out.embeddings = layer_norm(add(mid, ff), g.parameter(params.ln2_gain),
                              g.parameter(params.ln2_bias));
  return out;
}

ModelOutput forward(Graph& g, ModelParams& params, const Tensor& features) {
  ModelOutput out;
  out.embeddings.push_back(embed_input(g, params, features));
  for (EncoderBlockParams& block : params.blocks) {
    BlockOutput b = encoder_block(out.embeddings.back(), block, params.config.heads);
    out.embeddings.push_back(b.embeddings);
    out.attention.push_back(std::move(b.attention));
  }
  const Var normed = layer_norm(out.embeddings.back(), g.parameter(params.ln_out_gain),
                                g.parameter(params.ln_out_bias));
  out.posteriors = sigmoid(add_row(matmul(normed, g.parameter(params.w_head)),
                                   g.parameter(params.b_head)));
  return out;
}

AttentionTensor collect_attention(const ModelOutput& out) {
  AttentionTensor a;
  a.blocks = out.attention.size();
  a.heads = a.blocks ? out.attention.front().size() : 0;
  a.frames = a.blocks ? out.attention.front().front().value().rows() : 0;
  for (const auto& block : out.attention)
    for (const Var& head : block) a.weights.push_back(head.value());
  return a;
}

}  // namespace eend
