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

#include "aunet/evaluate.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aunet/bilinear.h"
#include "aunet/ops.h"

namespace aunet {

std::vector<InstancePrediction> paste_instances(const Tensor& mask_logits,
                                                const Tensor& class_logits,
                                                std::span<const RoI> rois, int height, int width,
                                                double threshold,
                                                const std::vector<int>& thing_ids) {
  const Shape ms = mask_logits.shape();
  const Shape cs = class_logits.shape();
  if (ms.n != static_cast<int>(rois.size()) || cs.n != ms.n) {
    throw std::invalid_argument("mask/class logits do not match the RoI count");
  }
  if (cs.c != static_cast<int>(thing_ids.size())) {
    throw std::invalid_argument("class logits do not match the thing categories");
  }
  const int m = ms.h;
  std::vector<InstancePrediction> out;
  for (int r = 0; r < ms.n; ++r) {
    const RoI& roi = rois[r];
    InstancePrediction inst;
    inst.height = height;
    inst.width = width;
    inst.mask.assign(static_cast<std::size_t>(height) * width, 0);

    int best = 0;
    Real peak = class_logits(r, 0, 0, 0);
    for (int k = 1; k < cs.c; ++k) {
      if (class_logits(r, k, 0, 0) > peak) {
        peak = class_logits(r, k, 0, 0);
        best = k;
      }
    }
    Real norm = 0;
    for (int k = 0; k < cs.c; ++k) norm += std::exp(class_logits(r, k, 0, 0) - peak);
    inst.category_id = thing_ids[best];
    inst.score = 1.0 / norm;

    const Real* plane = mask_logits.plane(r, 0);
    const int y0 = std::max(0, static_cast<int>(std::floor(roi.box.y1)));
    const int y1 = std::min(height, static_cast<int>(std::ceil(roi.box.y2)));
    const int x0 = std::max(0, static_cast<int>(std::floor(roi.box.x1)));
    const int x1 = std::min(width, static_cast<int>(std::ceil(roi.box.x2)));
    for (int y = y0; y < y1; ++y) {
      const Real cy = y + 0.5;
      if (cy < roi.box.y1 || cy > roi.box.y2) continue;
      const AxisTap ty = axis_tap((cy - roi.box.y1) / roi.box.height() * m - 0.5, m);
      for (int x = x0; x < x1; ++x) {
        const Real cx = x + 0.5;
        if (cx < roi.box.x1 || cx > roi.box.x2) continue;
        const AxisTap tx = axis_tap((cx - roi.box.x1) / roi.box.width() * m - 0.5, m);
        const Real top = plane[ty.lo * m + tx.lo] * (1 - tx.frac) + plane[ty.lo * m + tx.hi] * tx.frac;
        const Real bottom =
            plane[ty.hi * m + tx.lo] * (1 - tx.frac) + plane[ty.hi * m + tx.hi] * tx.frac;
        const Real logit = top * (1 - ty.frac) + bottom * ty.frac;
        if (sigmoid_value(logit) >= threshold) {
          inst.mask[static_cast<std::size_t>(y) * width + x] = 1;
        }
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

SemanticMap semantic_argmax(const Tensor& semantic_logits, const CategoryTable& categories) {
  const Shape s = semantic_logits.shape();
  if (s.n != 1 || s.c != static_cast<int>(categories.all().size())) {
    throw std::invalid_argument("semantic logits do not match the category table: " + s.str());
  }
  SemanticMap map{s.h, s.w, std::vector<int>(static_cast<std::size_t>(s.h) * s.w, kVoidCategory)};
  const std::size_t plane = s.plane();
  for (std::size_t p = 0; p < plane; ++p) {
    int best = 0;
    for (int k = 1; k < s.c; ++k) {
      if (semantic_logits.plane(0, k)[p] > semantic_logits.plane(0, best)[p]) best = k;
    }
    map.category[p] = categories.all()[best].id;
  }
  return map;
}

ScenePrediction predict_scene(Model& model, const Scene& scene, const CategoryTable& categories,
                              const FusionParams& fusion, AttentionHeatmaps* heatmaps) {
  Graph g;
  const ModelOutputs outputs = model.forward(g, scene.image, scene.rois);
  const Shape is = scene.image.shape();
  ScenePrediction pred;
  if (outputs.mask_logits) {
    pred.instances = paste_instances(g.value(*outputs.mask_logits), g.value(*outputs.class_logits),
                                     outputs.rois, is.h, is.w, fusion.mask_threshold,
                                     categories.thing_ids());
  }
  pred.semantic = semantic_argmax(g.value(outputs.semantic_logits), categories);
  pred.panoptic = fuse(pred.instances, pred.semantic, categories, fusion);
  if (heatmaps) {
    if (outputs.pam[4 - kFirstLevel]) {
      heatmaps->pam_level4 = g.value(outputs.pam[4 - kFirstLevel]->background_map);
    }
    if (outputs.mam[0]) heatmaps->mam_level2 = g.value(outputs.mam[0]->background_map);
  }
  return pred;
}

ScenePrediction oracle_prediction(const Scene& scene, const CategoryTable& categories,
                                  const FusionParams& fusion) {
  const PanopticMap& gt = scene.panoptic;
  ScenePrediction pred;
  pred.semantic = SemanticMap{gt.height, gt.width, gt.category};
  for (const Segment& s : extract_segments(gt, categories)) {
    if (!categories.is_thing(s.category_id)) continue;
    InstancePrediction inst;
    inst.height = gt.height;
    inst.width = gt.width;
    inst.mask.assign(gt.size(), 0);
    for (int p : s.pixels) inst.mask[p] = 1;
    inst.category_id = s.category_id;
    inst.score = 1.0;
    pred.instances.push_back(std::move(inst));
  }
  pred.panoptic = fuse(pred.instances, pred.semantic, categories, fusion);
  return pred;
}

EvalReport evaluate(Model& model, std::span<const Scene> scenes, const CategoryTable& categories,
                    const EvalOptions& options) {
  EvalReport report;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const bool capture = options.capture_heatmaps && static_cast<int>(i) == options.heatmap_scene;
    const ScenePrediction pred = predict_scene(model, scenes[i], categories, options.fusion,
                                               capture ? &report.heatmaps : nullptr);
    report.stats += evaluate_panoptic(pred.panoptic, scenes[i].panoptic, categories);
    ++report.scenes;
  }
  report.pq = compute_pq(report.stats, categories);
  return report;
}

}  // namespace aunet
