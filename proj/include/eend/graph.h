// include/eend/graph.h

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

#ifndef EEND_GRAPH_H_
#define EEND_GRAPH_H_

// Dynamic tape for reverse-mode differentiation.
//
// Ops append nodes in execution order, so the tape is always topologically
// sorted and backward() is a single reverse sweep. A graph is built per
// forward pass and discarded afterwards; nothing is shared between graphs
// except the parameter tensors they reference.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "eend/tensor.h"

namespace eend {

enum class OpKind {
  kConstant,
  kParameter,
  kMatmul,
  kMatmulNT,
  kTranspose,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kScale,
  kRelu,
  kSigmoid,
  kLog,
  kSquare,
  kSoftmaxRows,
  kLayerNorm,
  kSum,
  kMean,
  kSliceCols,
  kConcatCols,
  kBceMean,
  kMseMean,
};

std::string_view op_name(OpKind kind);

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Adjoint accumulated by the last backward(); empty if the node has none.
  std::span<const double> grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  // Called during backward with the graph and the node's own id. The node's
  // adjoint is complete at that point; the function adds into its inputs.
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // References `param` without copying. If param.requires_grad(), backward()
  // accumulates the adjoint into param.grad().
  Var parameter(Tensor& param);

  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value,
             BackwardFn backward);

  // Seeds d(root)/d(root) = seed for a scalar root and sweeps the tape once.
  void backward(const Var& root, double seed = 1.0);

  const Tensor& value(std::size_t id) const;
  // Adjoint buffer of a node, allocated on first use.
  std::span<double> grad(std::size_t id);
  std::span<const double> grad(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id]->needs_grad; }
  OpKind kind(std::size_t id) const { return nodes_[id]->kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const {
    return nodes_[id]->inputs;
  }
  std::size_t size() const { return nodes_.size(); }

  // Number of nodes whose backward function ran in the last sweep.
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor* param = nullptr;
    std::vector<double> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  std::vector<std::unique_ptr<Node>> nodes_;
  std::size_t last_visits_ = 0;
};

inline const Tensor& Var::value() const { return graph_->value(id_); }
inline std::span<const double> Var::grad() const {
  return std::as_const(*graph_).grad(id_);
}

}  // namespace eend

#endif  // EEND_GRAPH_H_
