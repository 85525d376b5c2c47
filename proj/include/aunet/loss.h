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

#ifndef AUNET_LOSS_H_
#define AUNET_LOSS_H_

#include <array>
#include <string>
#include <vector>

#include "aunet/model.h"
#include "aunet/panoptic_map.h"
#include "aunet/scene.h"

namespace aunet {

struct LossWeights {
  double rpn = 1;    // lambda_1
  double rcnn = 1;   // lambda_2
  double mask = 1;   // lambda_3
  double seg = 0.3;  // lambda_4

  static LossWeights coco() { return {1, 1, 1, 0.3}; }
  static LossWeights cityscapes() { return {1, 0.75, 1, 1}; }
  void validate() const;
};

// Supervision for one scene, shaped to match ModelOutputs.
struct TrainingTarget {
  std::vector<RoI> rois;
  std::array<Tensor, kNumLevels> objectness;  // 1 inside any box, per level
  std::vector<int> thing_labels;               // index into the thing classes
  Tensor masks;                                // [R, C_m, m, m]; empty when R = 0
  std::vector<int> semantic_labels;            // per pixel, -1 = void
};

TrainingTarget make_target(const Scene& scene, const CategoryTable& categories,
                           const ModelConfig& config);

struct LossTerms {
  Var total;
  Var rpn;
  Var rcnn;
  Var mask;
  Var seg;
};

struct LossValues {
  double total = 0;
  double rpn = 0;
  double rcnn = 0;
  double mask = 0;
  double seg = 0;
};

inline constexpr std::array<const char*, 4> kLossComponentNames{"rpn", "rcnn", "mask", "seg"};

// L = l1 * L_RPN + l2 * L_RCNN + l3 * L_Mask + l4 * L_Seg.
LossTerms joint_loss(Graph& g, const ModelOutputs& outputs, const TrainingTarget& target,
                     const LossWeights& weights);
LossValues loss_values(const Graph& g, const LossTerms& terms);
double combine_losses(const LossWeights& weights, double rpn, double rcnn, double mask,
                      double seg);

}  // namespace aunet

#endif  // AUNET_LOSS_H_
