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

#ifndef AUNET_MODEL_H_
#define AUNET_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aunet/attention.h"
#include "aunet/graph.h"
#include "aunet/roi_sampling.h"

namespace aunet {

inline constexpr int kNumLevels = 4;
inline constexpr int kFirstLevel = 2;

// Level l of the mini pyramid has stride 2^(l - 1) relative to the image.
inline int level_stride(int level) { return 1 << (level - 1); }

struct ModelConfig {
  int image_channels = 3;
  std::array<int, kNumLevels> backbone_widths{16, 32, 64, 64};
  int fpn_channels = 32;
  int rpn_channels = 32;         // C_r
  int pam_hidden_channels = 64;  // C'_r
  int semantic_channels = 32;    // C_s
  int mask_channels = 1;         // C_m
  int mask_resolution = 14;      // m
  int fg_channels = 32;
  int gn_groups = 4;
  int reweight_groups = 4;
  bool e2e = true;   // false: foreground and background get separate towers
  bool pam = true;
  bool mam = true;
  bool reweight = true;
  bool scatter_logits = false;  // scatter raw mask logits instead of probabilities
  ScaleAssignment scale{4, 32, 2, 5};
  int num_thing_classes = 3;
  int num_semantic_classes = 6;
  std::uint64_t init_seed = 1;

  // Throws std::invalid_argument naming the first inconsistent field.
  void validate() const;
};

// Flag settings of the ablation rows: sep, e2e, PAM, PAM_r, MAM, MAM_r, AUNet.
const std::vector<std::string>& ablation_row_names();
ModelConfig config_for_row(const std::string& row, ModelConfig base);

// conv3x3 (+ bias) -> group norm -> ReLU.
struct ConvBlock {
  Param w;
  Param gamma;
  Param beta;
  int stride = 1;
  int groups = 1;
};

struct Tower {
  std::array<ConvBlock, kNumLevels> down;    // stride 2
  std::array<ConvBlock, kNumLevels> refine;  // stride 1
  std::array<Param, kNumLevels> lateral_w;   // 1x1 into the pyramid width
  std::array<Param, kNumLevels> lateral_b;
};

struct ModelOutputs {
  std::array<Var, kNumLevels> rpn_features;  // P_i
  std::array<Var, kNumLevels> objectness;    // [1, 1, H_l, W_l] logits
  std::array<Var, kNumLevels> light_features;  // S_i before attention
  std::array<std::optional<AttentionOutputs>, kNumLevels> pam;
  std::array<std::optional<AttentionOutputs>, kNumLevels> mam;
  std::array<std::optional<Var>, kNumLevels> mask_canvas;  // P_roi per level
  std::optional<Var> mask_logits;   // [R, C_m, m, m]
  std::optional<Var> class_logits;  // [R, things, 1, 1]
  Var semantic_logits;              // [1, K, H, W]
  std::vector<RoI> rois;            // input RoIs with levels assigned
};

class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Single image [1, 3, H, W]; RoIs are teacher-forced ground truth boxes.
  ModelOutputs forward(Graph& g, const Tensor& image, std::span<const RoI> rois);

  std::vector<Param*> params();
  std::size_t parameter_count();
  // Parameter totals keyed by the first component of the parameter name.
  std::map<std::string, std::size_t> parameter_census();
  void zero_parameters();
  void zero_attention_convolutions();

  // Public so tests can wire reference computations by hand.
  ModelConfig config_;
  std::vector<Tower> towers;  // [0] foreground + RPN, [1] background when !e2e
  Param rpn_w, rpn_b;
  Param objectness_w, objectness_b;
  std::array<ConvBlock, kNumLevels> light_heads;
  std::vector<AttentionState> pam_states;
  std::vector<AttentionState> mam_states;
  Param semantic_w, semantic_b;
  ConvBlock fg_conv1, fg_conv2;
  Param mask_w, mask_b;
  Param class_w, class_b;

 private:
  std::array<Var, kNumLevels> run_tower(Graph& g, Tower& tower, Var image);
};

// Plain conv block forward shared by the model and reference tests.
Var conv_block(Graph& g, ConvBlock& block, Var x);

}  // namespace aunet

#endif  // AUNET_MODEL_H_
