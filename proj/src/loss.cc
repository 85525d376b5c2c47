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

#include "aunet/loss.h"

#include <algorithm>
#include <stdexcept>

#include "aunet/ops.h"

namespace aunet {

void LossWeights::validate() const {
  for (double w : {rpn, rcnn, mask, seg}) {
    if (!(w >= 0)) throw std::invalid_argument("loss weights must be nonnegative");
  }
}

TrainingTarget make_target(const Scene& scene, const CategoryTable& categories,
                           const ModelConfig& config) {
  TrainingTarget t;
  t.rois = scene.rois;
  const Shape is = scene.image.shape();
  for (int k = 0; k < kNumLevels; ++k) {
    const int stride = level_stride(k + kFirstLevel);
    // Level sizes follow the stride-2 convolutions: ceil halving per level.
    int lh = is.h, lw = is.w;
    for (int d = 0; d <= k; ++d) {
      lh = (lh - 1) / 2 + 1;
      lw = (lw - 1) / 2 + 1;
    }
    Tensor obj(Shape{1, 1, lh, lw});
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const double cx = (x + 0.5) * stride;
        const double cy = (y + 0.5) * stride;
        for (const RoI& r : scene.rois) {
          if (cx >= r.box.x1 && cx <= r.box.x2 && cy >= r.box.y1 && cy <= r.box.y2) {
            obj(0, 0, y, x) = 1;
            break;
          }
        }
      }
    }
    t.objectness[k] = std::move(obj);
  }

  const std::vector<int> things = categories.thing_ids();
  for (const RoI& r : scene.rois) {
    const auto it = std::find(things.begin(), things.end(), r.class_id);
    if (it == things.end()) {
      throw std::invalid_argument("RoI class " + std::to_string(r.class_id) + " is not a thing");
    }
    t.thing_labels.push_back(static_cast<int>(it - things.begin()));
  }

  const int m = config.mask_resolution;
  if (!scene.rois.empty()) {
    if (scene.masks.size() != scene.rois.size()) {
      throw std::invalid_argument("scene has a different number of masks and RoIs");
    }
    t.masks = Tensor(Shape{static_cast<int>(scene.rois.size()), config.mask_channels, m, m});
    for (std::size_t r = 0; r < scene.masks.size(); ++r) {
      const Tensor& src = scene.masks[r];
      if (src.shape() != Shape{1, 1, m, m}) {
        throw std::invalid_argument("mask target resolution does not match the model");
      }
      for (int c = 0; c < config.mask_channels; ++c) {
        std::copy(src.plane(0, 0), src.plane(0, 0) + m * m, t.masks.plane(static_cast<int>(r), c));
      }
    }
  }
  t.semantic_labels = semantic_targets(scene.panoptic, categories);
  return t;
}

LossTerms joint_loss(Graph& g, const ModelOutputs& outputs, const TrainingTarget& target,
                     const LossWeights& weights) {
  LossTerms terms;
  std::array<Var, kNumLevels> level_losses;
  for (int k = 0; k < kNumLevels; ++k) {
    level_losses[k] = bce_with_logits(g, outputs.objectness[k], target.objectness[k]);
  }
  const std::array<Real, kNumLevels> level_weights{0.25, 0.25, 0.25, 0.25};
  terms.rpn = weighted_sum(g, level_losses, level_weights);

  if (outputs.class_logits && !target.thing_labels.empty()) {
    terms.rcnn = softmax_cross_entropy(g, *outputs.class_logits, target.thing_labels);
    terms.mask = bce_with_logits(g, *outputs.mask_logits, target.masks);
  } else {
    terms.rcnn = g.constant(Tensor(Shape{1, 1, 1, 1}));
    terms.mask = g.constant(Tensor(Shape{1, 1, 1, 1}));
  }
  terms.seg = softmax_cross_entropy(g, outputs.semantic_logits, target.semantic_labels);

  const std::array<Var, 4> parts{terms.rpn, terms.rcnn, terms.mask, terms.seg};
  const std::array<Real, 4> lambdas{weights.rpn, weights.rcnn, weights.mask, weights.seg};
  terms.total = weighted_sum(g, parts, lambdas);
  return terms;
}

LossValues loss_values(const Graph& g, const LossTerms& terms) {
  return {g.value(terms.total)[0], g.value(terms.rpn)[0], g.value(terms.rcnn)[0],
          g.value(terms.mask)[0], g.value(terms.seg)[0]};
}

double combine_losses(const LossWeights& weights, double rpn, double rcnn, double mask,
                      double seg) {
  return weights.rpn * rpn + weights.rcnn * rcnn + weights.mask * mask + weights.seg * seg;
}

}  // namespace aunet
