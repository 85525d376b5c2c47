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

#ifndef AUNET_EVALUATE_H_
#define AUNET_EVALUATE_H_

#include <optional>
#include <span>
#include <vector>

#include "aunet/fusion.h"
#include "aunet/metrics.h"
#include "aunet/model.h"
#include "aunet/scene.h"

namespace aunet {

struct EvalOptions {
  FusionParams fusion;
  bool capture_heatmaps = false;
  int heatmap_scene = 0;
};

// Background attention maps of one scene: M' of PAM at level 4 and of MAM at
// level 2, as [1, 1, H_l, W_l].
struct AttentionHeatmaps {
  std::optional<Tensor> pam_level4;
  std::optional<Tensor> mam_level2;
};

struct ScenePrediction {
  std::vector<InstancePrediction> instances;
  SemanticMap semantic;
  PanopticMap panoptic;
};

struct EvalReport {
  PQStats stats;
  PQResult pq;
  int scenes = 0;
  AttentionHeatmaps heatmaps;
};

// Pastes sigmoid mask probabilities back into the image inside each RoI box;
// category and score come from the class logits.
std::vector<InstancePrediction> paste_instances(const Tensor& mask_logits,
                                                const Tensor& class_logits,
                                                std::span<const RoI> rois, int height, int width,
                                                double threshold,
                                                const std::vector<int>& thing_ids);

SemanticMap semantic_argmax(const Tensor& semantic_logits, const CategoryTable& categories);

ScenePrediction predict_scene(Model& model, const Scene& scene, const CategoryTable& categories,
                              const FusionParams& fusion, AttentionHeatmaps* heatmaps = nullptr);

// Ground-truth instances and semantics pushed through the same fusion path.
ScenePrediction oracle_prediction(const Scene& scene, const CategoryTable& categories,
                                  const FusionParams& fusion);

EvalReport evaluate(Model& model, std::span<const Scene> scenes, const CategoryTable& categories,
                    const EvalOptions& options = {});

}  // namespace aunet

#endif  // AUNET_EVALUATE_H_
