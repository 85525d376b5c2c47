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

#ifndef AUNET_ATTENTION_H_
#define AUNET_ATTENTION_H_

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aunet/graph.h"

namespace aunet {

// Parameters of one attention block at one pyramid level. The same layout
// serves the proposal attention module (source = RPN features) and the mask
// attention module (source = upsampled instance masks).
struct AttentionState {
  int level = 0;
  int source_channels = 0;   // C_r for PAM, C_m for MAM
  int hidden_channels = 0;   // C'_r
  int feature_channels = 0;  // C_s
  int reweight_groups = 1;   // group-norm groups of the channel reweight

  Param w1;     // [hidden, source, 1, 1]
  Param w2;     // [1, hidden, 1, 1]
  Param w3;     // [C_s, C_s, 1, 1]
  Param gamma;  // [C_s, 1, 1, 1]
  Param beta;   // [C_s, 1, 1, 1]

  // He fan-in initialization for the convolutions; gamma = 1, beta = 0.
  static AttentionState create(const std::string& prefix, int level, int source_channels,
                               int hidden_channels, int feature_channels,
                               int reweight_groups, std::mt19937_64& rng);

  // Zeroes the three convolutions and beta; gamma stays at 1.
  void zero_convolutions();

  std::vector<Param*> params();
};

// Graph handles for an AttentionState.
struct AttentionVars {
  Var w1;
  Var w2;
  Var w3;
  Var gamma;
  Var beta;
  int groups = 1;
};

AttentionVars bind(Graph& g, AttentionState& state);

struct AttentionOutputs {
  Var foreground_map;   // M, pre-sigmoid, [N, 1, H, W]
  Var background_map;   // M' = 1 - sigmoid(M)
  Var attended;         // S' = S * M' + S
  std::optional<Var> channel_weights;  // N, [N, C_s, 1, 1]
  Var output;           // S'' when reweighting, else S'
};

// M = conv(relu(conv(source, w1)), w2).
Var pam_foreground_map(Graph& g, Var source, Var w1, Var w2);

// Returns S' = S * (1 - sigmoid(M)) + S; stores M' in *background_map.
Var apply_background_attention(Graph& g, Var features, Var foreground_map,
                               Var* background_map = nullptr);

// N = sigmoid(GN(conv(GAP(S'), w3))); returns S' * N, stores N if asked.
Var background_reweight(Graph& g, Var attended, Var w3, Var gamma, Var beta, int groups,
                        Var* channel_weights = nullptr);

// Proposal attention: rpn_features P_i drive the background weighting of S_i.
AttentionOutputs pam(Graph& g, Var rpn_features, Var semantic_features,
                     const AttentionVars& vars, bool reweight = true);

// Mask attention: the upsampled mask canvas P_roi drives the same pattern on
// the PAM-refined features.
AttentionOutputs mam(Graph& g, Var pam_features, Var mask_canvas, const AttentionVars& vars,
                     bool reweight = true);

}  // namespace aunet

#endif  // AUNET_ATTENTION_H_
