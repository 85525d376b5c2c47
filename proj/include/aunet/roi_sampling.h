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

#ifndef AUNET_ROI_SAMPLING_H_
#define AUNET_ROI_SAMPLING_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "aunet/graph.h"

namespace aunet {

// Axis-aligned box in continuous image coordinates; pixel (i, j) spans
// [j, j+1) x [i, i+1).
struct Box {
  Real x1 = 0;
  Real y1 = 0;
  Real x2 = 0;
  Real y2 = 0;

  Real width() const { return x2 - x1; }
  Real height() const { return y2 - y1; }
};

struct RoI {
  int batch_index = 0;
  Box box;
  Real score = 1;
  int class_id = 0;
  int level = -1;  // pyramid level in [2, 5] once assigned

  std::string str() const;
};

// Fixed-resolution mask prediction for one RoI. logits: [1, C_m, m, m].
struct MaskPatch {
  RoI roi;
  Tensor logits;
};

inline constexpr int kSamplesPerAxis = 2;  // 2x2 regular samples per bin

// Inverse bilinear coefficients for a sample at fractional offset
// (x_p, y_p) from its top-left grid point. weights index the neighbours
// (x0,y0), (x0,y1), (x1,y0), (x1,y1); forward bilinear interpolation of
// weights * v at the same offset returns v.
struct InverseBilinearWeights {
  std::array<Real, 4> weights{};
  Real value_x = 1;
  Real value_y = 1;
};

InverseBilinearWeights inverse_bilinear_weights(Real x_p, Real y_p);

// Share of a bin's value carried by each of its four sample points when it is
// scattered. kFull makes roi_align an exact left inverse of roi_upsample on
// non-overlapping layouts; kQuarter is the literal quarter split.
enum class SampleShare { kFull, kQuarter };

enum class CanvasAggregation { kSum, kMax };

struct RoiUpsampleOptions {
  SampleShare share = SampleShare::kFull;
  // kMax is for visualization only and has no backward rule.
  CanvasAggregation aggregation = CanvasAggregation::kSum;
};

// Average of the 2x2 bilinear samples in each of the m x m bins.
// features: [N, C, H, W]; returns [1, C, m, m].
Tensor roi_align_forward(const Tensor& features, const RoI& roi, int out_size,
                         Real spatial_scale);

// Accumulates the vector-Jacobian product of roi_align_forward into
// grad_features.
void roi_align_backward(const Tensor& grad_out, const RoI& roi, Real spatial_scale,
                        Tensor& grad_features);

// Scatters each mask into canvas [N, C_m, H, W] with inverse bilinear
// weights. When level >= 0 only masks whose RoI carries that level are used.
// Cells no sample reaches stay zero.
Tensor roi_upsample_forward(std::span<const MaskPatch> masks, const Shape& canvas,
                            Real spatial_scale, int level = -1,
                            const RoiUpsampleOptions& options = {});

// FPN rule: clamp(k0 + floor(log2(sqrt(w*h) / canonical_size)), min, max).
struct ScaleAssignment {
  int canonical_level = 4;
  Real canonical_size = 224;
  int min_level = 2;
  int max_level = 5;
};

int assign_scale(const RoI& roi, const ScaleAssignment& rule = {});

// One feature map per pyramid level, ordered from min_level upward.
struct PyramidLevel {
  Var features;
  Real spatial_scale = 1;
};

// RoIAlign over a batch of RoIs -> [R, C, m, m]. With a single level every
// RoI reads from it; otherwise RoI level L reads levels[L - first_level].
Var roi_align(Graph& g, std::span<const PyramidLevel> levels,
              std::span<const RoI> rois, int out_size, int first_level = 2);

// masks: [R, C_m, m, m] aligned with rois. Output: canvas of shape `canvas`.
Var roi_upsample(Graph& g, Var masks, std::span<const RoI> rois, const Shape& canvas,
                 Real spatial_scale, int level = -1,
                 const RoiUpsampleOptions& options = {});

}  // namespace aunet

#endif  // AUNET_ROI_SAMPLING_H_
