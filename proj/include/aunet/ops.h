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

#ifndef AUNET_OPS_H_
#define AUNET_OPS_H_

#include <optional>
#include <span>
#include <vector>

#include "aunet/graph.h"

namespace aunet {

inline constexpr Real kGroupNormEps = 1e-5;

// 1x1 convolution. w: [Cout, Cin, 1, 1], bias: [Cout, 1, 1, 1].
Var pointwise_conv(Graph& g, Var x, Var w, std::optional<Var> bias = std::nullopt);

// 3x3 cross-correlation with padding 1 and stride 1 or 2.
Var conv3x3(Graph& g, Var x, Var w, std::optional<Var> bias = std::nullopt,
            int stride = 1);

// Group normalization with per-channel affine. gamma, beta: [C, 1, 1, 1].
Var group_norm(Graph& g, Var x, int groups, Var gamma, Var beta,
               Real eps = kGroupNormEps);

// [N, C, H, W] -> [N, C, 1, 1].
Var global_avg_pool(Graph& g, Var x);

enum class Activation { kRelu, kSigmoid };
Var activation(Graph& g, Var x, Activation kind);
inline Var relu(Graph& g, Var x) { return activation(g, x, Activation::kRelu); }
inline Var sigmoid(Graph& g, Var x) { return activation(g, x, Activation::kSigmoid); }

// b must match a, or be [N, 1, H, W] (spatial map broadcast over channels),
// or [N, C, 1, 1] (channel weights broadcast over space).
enum class Elementwise { kMul, kAdd };
Var elementwise(Graph& g, Var a, Var b, Elementwise kind);
inline Var mul(Graph& g, Var a, Var b) { return elementwise(g, a, b, Elementwise::kMul); }
inline Var add(Graph& g, Var a, Var b) { return elementwise(g, a, b, Elementwise::kAdd); }

// scale * x + shift.
Var affine(Graph& g, Var x, Real scale, Real shift);

// Half-pixel-center bilinear resampling of every plane.
Var bilinear_resize(Graph& g, Var x, int out_h, int out_w);

// Mean binary cross-entropy between logits and targets in [0, 1].
Var bce_with_logits(Graph& g, Var logits, const Tensor& targets);

// Mean softmax cross-entropy over channel dimension. labels holds one class
// index per (n, h, w) position in raster order; `ignore_label` entries are
// skipped. Returns 0 when nothing is labelled.
Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels,
                          int ignore_label = -1);

// sum_i weights[i] * scalars[i]; every scalar is a single element.
Var weighted_sum(Graph& g, std::span<const Var> scalars,
                 std::span<const Real> weights);

// Plain forward kernels shared with non-differentiable callers.
Real sigmoid_value(Real x);
Tensor bilinear_resize_forward(const Tensor& x, int out_h, int out_w);

}  // namespace aunet

#endif  // AUNET_OPS_H_
