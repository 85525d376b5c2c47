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

#include "aunet/graph.h"

#include <stdexcept>

#include <fmt/format.h>

namespace aunet {

Graph::Node& Graph::node(Var v) {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range(fmt::format("unknown graph variable {}", v.id));
  }
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  return const_cast<Graph*>(this)->node(v);
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, false, nullptr, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, true, nullptr, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Param& p) {
  nodes_.push_back(Node{p.value, Tensor(), false, true, &p, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs,
                  BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs,
                  BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || node(in).requires_grad;
  Node n{std::move(value), Tensor(), false, needs, nullptr, {}};
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  return n.has_grad ? n.grad : Tensor::zeros_like(n.value);
}

Tensor& Graph::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) {
    throw std::logic_error("gradient requested for a constant graph node");
  }
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var root) {
  if (value(root).size() != 1) {
    throw std::invalid_argument(fmt::format(
        "backward() without a seed needs a scalar root, got {}",
        shape(root).str()));
  }
  backward(root, Tensor(shape(root), 1.0));
}

void Graph::backward(Var root, const Tensor& seed) {
  if (seed.shape() != shape(root)) {
    throw std::invalid_argument(fmt::format("seed shape {} does not match root {}",
                                            seed.shape().str(),
                                            shape(root).str()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  if (!node(root).requires_grad) return;
  grad_buffer(root) += seed;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Rules only touch their inputs' buffers, which precede this node.
    n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.has_grad) n.param->grad += n.grad;
  }
}

}  // namespace aunet
