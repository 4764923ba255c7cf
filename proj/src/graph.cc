// src/graph.cc

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

#include "eend/graph.h"

#include <algorithm>

#include "eend/error.h"

namespace eend {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kMatmulNT: return "matmul_nt";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLog: return "log";
    case OpKind::kSquare: return "square";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kBceMean: return "bce_mean";
    case OpKind::kMseMean: return "mse_mean";
  }
  return "unknown";
}

Var Graph::constant(Tensor value) {
  auto node = std::make_unique<Node>();
  node->kind = OpKind::kConstant;
  node->value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor& param) {
  auto node = std::make_unique<Node>();
  node->kind = OpKind::kParameter;
  node->param = &param;
  node->needs_grad = param.requires_grad();
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value,
                  BackwardFn backward) {
  auto node = std::make_unique<Node>();
  node->kind = kind;
  for (std::size_t id : inputs) {
    if (id >= nodes_.size()) throw Error("op input recorded out of order");
    node->needs_grad = node->needs_grad || nodes_[id]->needs_grad;
  }
  node->inputs = std::move(inputs);
  node->value = std::move(value);
  if (node->needs_grad) node->backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& node = *nodes_[id];
  return node.param ? *node.param : node.value;
}

std::span<double> Graph::grad(std::size_t id) {
  Node& node = *nodes_[id];
  if (node.grad.empty()) node.grad.assign(value(id).size(), 0.0);
  return node.grad;
}

std::span<const double> Graph::grad(std::size_t id) const {
  return nodes_[id]->grad;
}

void Graph::backward(const Var& root, double seed) {
  if (&root.graph() != this) throw Error("backward root from another graph");
  if (value(root.id()).size() != 1)
    throw DimensionError("backward root must be a scalar, got " +
                         shape_string(value(root.id()).shape()));
  for (auto& node : nodes_) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  grad(root.id())[0] = seed;
  last_visits_ = 0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = *nodes_[id];
    if (!node.needs_grad || node.grad.empty()) continue;
    ++last_visits_;
    if (node.param) {
      std::span<double> dst = node.param->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

}  // namespace eend
