// Copyright 2026 The AUNet-mini Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUNET_GRAPH_H_
#define AUNET_GRAPH_H_

#include <deque>
#include <functional>
#include <initializer_list>

#include "aunet/tensor.h"

namespace aunet {

// Handle to a value recorded on a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records operator outputs in evaluation order. backward() walks the record
// in reverse and calls each node's vector-Jacobian rule.
//
// Leaves created with param() forward their gradient into Param::grad when
// backward() finishes; the Param must outlive the Graph.
class Graph {
 public:
  // Receives dL/d(output) and accumulates into the node's inputs.
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  Var param(Param& p);

  // Appends an operator output. The backward rule is dropped when none of
  // the inputs require a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;

  // Gradient of the last backward pass; zeros if nothing reached v.
  Tensor grad(Var v) const;

  // Zero-initialized on first use. Only valid for nodes that require grad.
  Tensor& grad_buffer(Var v);

  // Seeds dL/d(root) = 1; root must hold a single element.
  void backward(Var root);
  void backward(Var root, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Param* param = nullptr;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
};

}  // namespace aunet

#endif  // AUNET_GRAPH_H_
