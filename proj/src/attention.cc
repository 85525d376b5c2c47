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

#include "aunet/attention.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "aunet/ops.h"

namespace aunet {

namespace {

Tensor he_normal(Shape shape, std::mt19937_64& rng) {
  const int fan_in = shape.c * shape.h * shape.w;
  std::normal_distribution<Real> dist(0.0, std::sqrt(2.0 / fan_in));
  Tensor t(shape);
  for (Real& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

AttentionState AttentionState::create(const std::string& prefix, int level,
                                      int source_channels, int hidden_channels,
                                      int feature_channels, int reweight_groups,
                                      std::mt19937_64& rng) {
  if (feature_channels % reweight_groups != 0) {
    throw std::invalid_argument(fmt::format(
        "{}: feature channels {} not divisible by {} reweight groups", prefix,
        feature_channels, reweight_groups));
  }
  AttentionState s;
  s.level = level;
  s.source_channels = source_channels;
  s.hidden_channels = hidden_channels;
  s.feature_channels = feature_channels;
  s.reweight_groups = reweight_groups;
  s.w1 = Param(prefix + ".w1", he_normal({hidden_channels, source_channels, 1, 1}, rng));
  s.w2 = Param(prefix + ".w2", he_normal({1, hidden_channels, 1, 1}, rng));
  s.w3 = Param(prefix + ".w3", he_normal({feature_channels, feature_channels, 1, 1}, rng));
  s.gamma = Param(prefix + ".gn_gamma", Tensor({feature_channels, 1, 1, 1}, 1.0));
  s.beta = Param(prefix + ".gn_beta", Tensor({feature_channels, 1, 1, 1}, 0.0));
  return s;
}

void AttentionState::zero_convolutions() {
  w1.value.fill(0);
  w2.value.fill(0);
  w3.value.fill(0);
  beta.value.fill(0);
}

std::vector<Param*> AttentionState::params() { return {&w1, &w2, &w3, &gamma, &beta}; }

AttentionVars bind(Graph& g, AttentionState& state) {
  return {g.param(state.w1), g.param(state.w2), g.param(state.w3), g.param(state.gamma),
          g.param(state.beta), state.reweight_groups};
}

Var pam_foreground_map(Graph& g, Var source, Var w1, Var w2) {
  return pointwise_conv(g, relu(g, pointwise_conv(g, source, w1)), w2);
}

Var apply_background_attention(Graph& g, Var features, Var foreground_map,
                               Var* background_map) {
  const Shape fs = g.shape(features);
  const Shape ms = g.shape(foreground_map);
  if (ms.c != 1 || ms.n != fs.n || ms.h != fs.h || ms.w != fs.w) {
    throw std::invalid_argument(fmt::format(
        "background attention: map {} does not cover features {}", ms.str(), fs.str()));
  }
  const Var weights = affine(g, sigmoid(g, foreground_map), -1.0, 1.0);
  if (background_map) *background_map = weights;
  return add(g, mul(g, features, weights), features);
}

Var background_reweight(Graph& g, Var attended, Var w3, Var gamma, Var beta, int groups,
                        Var* channel_weights) {
  const Var pooled = global_avg_pool(g, attended);
  const Var n = sigmoid(g, group_norm(g, pointwise_conv(g, pooled, w3), groups, gamma, beta));
  if (channel_weights) *channel_weights = n;
  return mul(g, attended, n);
}

namespace {

AttentionOutputs attend(Graph& g, Var source, Var features, const AttentionVars& vars,
                        bool reweight) {
  AttentionOutputs out;
  out.foreground_map = pam_foreground_map(g, source, vars.w1, vars.w2);
  out.attended =
      apply_background_attention(g, features, out.foreground_map, &out.background_map);
  out.output = out.attended;
  if (reweight) {
    Var n;
    out.output = background_reweight(g, out.attended, vars.w3, vars.gamma, vars.beta,
                                     vars.groups, &n);
    out.channel_weights = n;
  }
  return out;
}

}  // namespace

AttentionOutputs pam(Graph& g, Var rpn_features, Var semantic_features,
                     const AttentionVars& vars, bool reweight) {
  const Shape ps = g.shape(rpn_features);
  const Shape ss = g.shape(semantic_features);
  if (ps.n != ss.n || ps.h != ss.h || ps.w != ss.w) {
    throw std::invalid_argument(fmt::format(
        "pam: RPN features {} and semantic features {} differ spatially", ps.str(), ss.str()));
  }
  return attend(g, rpn_features, semantic_features, vars, reweight);
}

AttentionOutputs mam(Graph& g, Var pam_features, Var mask_canvas, const AttentionVars& vars,
                     bool reweight) {
  const Shape ms = g.shape(mask_canvas);
  const Shape ss = g.shape(pam_features);
  if (ms.n != ss.n || ms.h != ss.h || ms.w != ss.w) {
    throw std::invalid_argument(fmt::format(
        "mam: mask canvas {} does not match semantic features {}", ms.str(), ss.str()));
  }
  return attend(g, mask_canvas, pam_features, vars, reweight);
}

}  // namespace aunet
