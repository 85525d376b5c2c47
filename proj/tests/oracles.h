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

// Reference implementations and random generators shared by the unit tests
// and the acceptance runner. Nothing here calls into the code it checks.

#ifndef AUNET_TESTS_ORACLES_H_
#define AUNET_TESTS_ORACLES_H_

#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "aunet/fusion.h"
#include "aunet/panoptic_map.h"
#include "aunet/tensor.h"

namespace aunet::testing {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, Real lo = -1, Real hi = 1);

// Direct-formula references.
Real naive_bilinear(const Tensor& x, int n, int c, Real y, Real xx);
Tensor naive_conv3x3(const Tensor& x, const Tensor& w, int stride);

// Brute-force panoptic quality. Segments are built from raw pixel sets, every
// admissible partial matching is enumerated, and IoU uses set intersection.
struct OracleCategory {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double iou_sum = 0;
};

struct OracleQuality {
  double pq = 0;
  double sq = 0;
  double rq = 0;
};

struct OracleResult {
  std::map<int, OracleCategory> per_category;
  std::map<int, OracleQuality> quality;
  OracleQuality all;
  OracleQuality things;
  OracleQuality stuff;
  // Matched (pred key, gt key) pairs; a key is category * 1000 + instance.
  std::vector<std::pair<int, int>> matches;
};

OracleResult brute_force_pq(const std::vector<std::pair<PanopticMap, PanopticMap>>& pairs,
                            const CategoryTable& categories);

// Category table with things 1-3 and stuff 4-6.
CategoryTable oracle_categories();

// Ground truth of up to 6 segments on an h x w grid plus a perturbed
// prediction (shifted, relabelled, dropped or spurious rectangles).
std::pair<PanopticMap, PanopticMap> random_panoptic_pair(std::mt19937_64& rng, int h = 16,
                                                         int w = 16);

// Random valid partition map over the oracle categories.
PanopticMap random_panoptic_map(std::mt19937_64& rng, int h, int w);

struct FusionCase {
  std::vector<InstancePrediction> instances;
  SemanticMap semantic;
  CategoryTable categories;
  FusionParams params;
};

FusionCase random_fusion_case(std::mt19937_64& rng, int h = 16, int w = 16);

}  // namespace aunet::testing

#endif  // AUNET_TESTS_ORACLES_H_
