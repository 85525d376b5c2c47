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

#ifndef AUNET_HEATMAP_H_
#define AUNET_HEATMAP_H_

#include <vector>

#include "aunet/panoptic_io.h"
#include "aunet/tensor.h"

namespace aunet {

enum class Palette { kJet, kGray };

struct Heatmap {
  RgbImage image;
  std::vector<double> positions;  // normalized [0, 1] per source pixel
  bool constant = false;          // all values equal; rendered at 0.5
};

// Min-max normalizes a [1, 1, H, W] map and colors it. Each source pixel
// becomes an upscale x upscale block.
Heatmap render_heatmap(const Tensor& map, Palette palette = Palette::kJet, int upscale = 1);

std::array<std::uint8_t, 3> palette_color(Palette palette, double t);

}  // namespace aunet

#endif  // AUNET_HEATMAP_H_
