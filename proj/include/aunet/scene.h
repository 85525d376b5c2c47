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

#ifndef AUNET_SCENE_H_
#define AUNET_SCENE_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aunet/panoptic_map.h"
#include "aunet/roi_sampling.h"
#include "aunet/tensor.h"

namespace aunet {

enum class ThingShape { kDisk, kRectangle, kTriangle };

// Synthetic scene recipe: horizontal stuff bands with distinct textures and
// a few solid shapes composited on top.
struct SceneSpec {
  std::uint64_t seed = 0;
  int height = 64;
  int width = 64;
  int min_things = 1;
  int max_things = 4;
  std::vector<ThingShape> shapes{ThingShape::kDisk, ThingShape::kRectangle,
                                 ThingShape::kTriangle};
  int stuff_bands = 3;  // 1..3 of sky, grass, road
  double noise = 0.04;
  int min_thing_size = 10;
  int max_thing_size = 22;
  int min_visible_area = 40;
};

struct Scene {
  Tensor image;             // [1, 3, H, W], multiples of 1/255
  PanopticMap panoptic;     // exact ground truth
  std::vector<RoI> rois;    // one per thing, ordered by instance id
  std::vector<Tensor> masks;  // binary m x m crops, [1, 1, m, m]
  std::vector<int> draw_order;  // instance ids back to front
};

// Ids 1-3 are the disk/rectangle/triangle things, 4-6 sky/grass/road stuff.
CategoryTable synthetic_categories();

// Pure function of the spec. Throws std::invalid_argument when the requested
// things cannot fit.
Scene generate_scene(const SceneSpec& spec, int mask_resolution = 14);

// Boxes and m x m mask targets for every thing segment, as generate_scene
// produces them.
void annotate_things(Scene& scene, const CategoryTable& categories, int mask_resolution);

// Semantic class index per pixel (position of the category in the table);
// -1 for void.
std::vector<int> semantic_targets(const PanopticMap& map, const CategoryTable& categories);

// Specs for `count` consecutive seeds starting at `first_seed`.
std::vector<SceneSpec> scene_split(std::uint64_t first_seed, int count, const SceneSpec& base = {});

// Writes images/, panoptic/ and annotations.json under `dir`.
void save_scenes(const std::filesystem::path& dir, const std::vector<Scene>& scenes,
                 const CategoryTable& categories);
std::vector<Scene> load_scenes(const std::filesystem::path& dir, const CategoryTable& categories,
                               int mask_resolution);

}  // namespace aunet

#endif  // AUNET_SCENE_H_
