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

#ifndef AUNET_METRICS_H_
#define AUNET_METRICS_H_

#include <map>
#include <string>
#include <vector>

#include "aunet/panoptic_map.h"

namespace aunet {

// |a ∩ b| / |a ∪ b| over raster pixel sets.
double iou(const Segment& a, const Segment& b);

struct MatchOptions {
  double iou_threshold = 0.5;  // strict: a pair matches when IoU > threshold
  // Unmatched predictions covered by ground-truth void beyond this fraction of
  // their area are not false positives.
  double void_fraction = 0.5;
};

struct SegmentMatch {
  int category_id = 0;
  int pred_index = -1;
  int gt_index = -1;
  double iou = 0;
};

struct MatchResult {
  std::vector<Segment> pred_segments;
  std::vector<Segment> gt_segments;
  std::vector<SegmentMatch> matches;
  std::vector<int> false_positives;   // indices into pred_segments
  std::vector<int> false_negatives;   // indices into gt_segments
  std::vector<int> ignored_predictions;  // mostly void-covered, not counted
};

// Pairs same-category segments with IoU above the threshold. Union excludes
// predicted pixels that fall on ground-truth void.
MatchResult match_segments(const PanopticMap& pred, const PanopticMap& gt,
                           const CategoryTable& categories, const MatchOptions& options = {});

struct CategoryStats {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double iou_sum = 0;

  CategoryStats& operator+=(const CategoryStats& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    iou_sum += o.iou_sum;
    return *this;
  }
};

struct PQStats {
  std::map<int, CategoryStats> per_category;

  void add(const MatchResult& result);
  PQStats& operator+=(const PQStats& other);
};

PQStats evaluate_panoptic(const PanopticMap& pred, const PanopticMap& gt,
                          const CategoryTable& categories, const MatchOptions& options = {});

struct Quality {
  double pq = 0;
  double sq = 0;
  double rq = 0;
  int categories = 0;  // number averaged
};

struct PQResult {
  std::map<int, Quality> per_category;
  Quality all;
  Quality things;
  Quality stuff;
  // Set when no category had any segment to score.
  bool empty = true;
};

Quality category_quality(const CategoryStats& stats);

// Category means skip categories with tp + fp + fn == 0.
PQResult compute_pq(const PQStats& stats, const CategoryTable& categories);

// Aligned table with PQ, SQ, RQ rows for All / Things / Stuff and each category.
std::string format_pq_table(const PQResult& result, const CategoryTable& categories);

// `key = value` lines: pq, pq_th, pq_st, sq, rq, sq_th, ...
std::string format_pq_keyvalue(const PQResult& result);

}  // namespace aunet

#endif  // AUNET_METRICS_H_
