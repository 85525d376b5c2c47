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

#ifndef AUNET_FUSION_H_
#define AUNET_FUSION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "aunet/panoptic_map.h"

namespace aunet {

struct InstancePrediction {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> mask;  // 1 where the instance is present
  int category_id = 0;
  double score = 0;

  std::size_t area() const;
};

struct FusionParams {
  double keep_fraction = 0.5;  // discard instances keeping less of their mask
  int stuff_area_min = 64;     // smaller stuff regions are relabelled
  double mask_threshold = 0.5; // binarization of pasted mask probabilities
};

// Per-pixel semantic category (stuff or thing id; 0 for void).
struct SemanticMap {
  int height = 0;
  int width = 0;
  std::vector<int> category;
};

// Canonical claim order: score desc, area desc, category asc, then mask bytes.
void sort_by_confidence(std::vector<InstancePrediction>& instances);

// Greedy claim in confidence order. A candidate keeps the unclaimed pixels
// plus pixels held by earlier claimants it is protected from (see
// CategoryTable::protected_from); it is dropped if that is below
// keep_fraction of its mask. Survivors are returned in claim order.
std::vector<InstancePrediction> resolve_overlaps(std::vector<InstancePrediction> instances,
                                                 const CategoryTable& categories,
                                                 const FusionParams& params);

// Writes instances first (ids 1, 2, ... in the given order), fills the rest
// from stuff semantics, and relabels stuff components smaller than
// stuff_area_min to the largest adjacent large stuff component, or void.
PanopticMap merge_panoptic(const std::vector<InstancePrediction>& resolved,
                           const SemanticMap& semantic, const CategoryTable& categories,
                           const FusionParams& params);

PanopticMap fuse(std::vector<InstancePrediction> instances, const SemanticMap& semantic,
                 const CategoryTable& categories, const FusionParams& params);

// Parses lines of `<category> never_overlapped_by <category>` (names or ids;
// '#' starts a comment) into the table.
void load_relations(const std::string& text, CategoryTable& categories);

}  // namespace aunet

#endif  // AUNET_FUSION_H_
