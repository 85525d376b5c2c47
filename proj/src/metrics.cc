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

#include "aunet/metrics.h"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace aunet {

double iou(const Segment& a, const Segment& b) {
  std::size_t inter = 0;
  auto i = a.pixels.begin();
  auto j = b.pixels.begin();
  while (i != a.pixels.end() && j != b.pixels.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

MatchResult match_segments(const PanopticMap& pred, const PanopticMap& gt,
                           const CategoryTable& categories, const MatchOptions& options) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw std::invalid_argument(fmt::format("prediction is {}x{} but ground truth is {}x{}",
                                            pred.height, pred.width, gt.height, gt.width));
  }
  MatchResult result;
  result.pred_segments = extract_segments(pred, categories);
  result.gt_segments = extract_segments(gt, categories);
  const std::size_t np = result.pred_segments.size();
  const std::size_t ng = result.gt_segments.size();

  // Segment index per pixel; -1 for void.
  std::vector<int> pred_of(pred.size(), -1);
  std::vector<int> gt_of(gt.size(), -1);
  for (std::size_t s = 0; s < np; ++s) {
    for (int p : result.pred_segments[s].pixels) pred_of[p] = static_cast<int>(s);
  }
  for (std::size_t s = 0; s < ng; ++s) {
    for (int p : result.gt_segments[s].pixels) gt_of[p] = static_cast<int>(s);
  }
  // Joint histogram; gt column ng collects ground-truth void.
  std::vector<long> overlap((ng + 1) * np, 0);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (pred_of[p] < 0) continue;
    const std::size_t g = gt_of[p] < 0 ? ng : static_cast<std::size_t>(gt_of[p]);
    ++overlap[static_cast<std::size_t>(pred_of[p]) * (ng + 1) + g];
  }

  std::vector<bool> pred_matched(np, false), gt_matched(ng, false);
  for (std::size_t pi = 0; pi < np; ++pi) {
    const Segment& ps = result.pred_segments[pi];
    const long void_px = overlap[pi * (ng + 1) + ng];
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const long inter = overlap[pi * (ng + 1) + gi];
      if (inter == 0) continue;
      const Segment& gs = result.gt_segments[gi];
      if (gs.category_id != ps.category_id) continue;
      const long uni = static_cast<long>(ps.area() + gs.area()) - inter - void_px;
      const double v = static_cast<double>(inter) / uni;
      if (v <= options.iou_threshold) continue;
      // IoU above one half cannot be shared, so no pair is ever contested.
      pred_matched[pi] = gt_matched[gi] = true;
      result.matches.push_back(
          SegmentMatch{ps.category_id, static_cast<int>(pi), static_cast<int>(gi), v});
    }
  }
  for (std::size_t gi = 0; gi < ng; ++gi) {
    if (!gt_matched[gi]) result.false_negatives.push_back(static_cast<int>(gi));
  }
  for (std::size_t pi = 0; pi < np; ++pi) {
    if (pred_matched[pi]) continue;
    const double void_share = static_cast<double>(overlap[pi * (ng + 1) + ng]) /
                              result.pred_segments[pi].area();
    if (void_share > options.void_fraction) {
      result.ignored_predictions.push_back(static_cast<int>(pi));
    } else {
      result.false_positives.push_back(static_cast<int>(pi));
    }
  }
  return result;
}

void PQStats::add(const MatchResult& result) {
  for (const auto& m : result.matches) {
    auto& s = per_category[m.category_id];
    ++s.tp;
    s.iou_sum += m.iou;
  }
  for (int i : result.false_positives) ++per_category[result.pred_segments[i].category_id].fp;
  for (int i : result.false_negatives) ++per_category[result.gt_segments[i].category_id].fn;
}

PQStats& PQStats::operator+=(const PQStats& other) {
  for (const auto& [cat, s] : other.per_category) per_category[cat] += s;
  return *this;
}

PQStats evaluate_panoptic(const PanopticMap& pred, const PanopticMap& gt,
                          const CategoryTable& categories, const MatchOptions& options) {
  PQStats stats;
  stats.add(match_segments(pred, gt, categories, options));
  return stats;
}

Quality category_quality(const CategoryStats& s) {
  Quality q;
  q.categories = 1;
  if (s.tp == 0) return q;
  q.sq = s.iou_sum / s.tp;
  q.rq = s.tp / (s.tp + 0.5 * s.fp + 0.5 * s.fn);
  q.pq = q.sq * q.rq;
  return q;
}

namespace {

void accumulate(Quality& mean, const Quality& q) {
  mean.pq += q.pq;
  mean.sq += q.sq;
  mean.rq += q.rq;
  ++mean.categories;
}

void finish(Quality& mean) {
  if (mean.categories == 0) return;
  mean.pq /= mean.categories;
  mean.sq /= mean.categories;
  mean.rq /= mean.categories;
}

}  // namespace

PQResult compute_pq(const PQStats& stats, const CategoryTable& categories) {
  PQResult result;
  for (const auto& meta : categories.all()) {
    auto it = stats.per_category.find(meta.id);
    if (it == stats.per_category.end()) continue;
    const CategoryStats& s = it->second;
    if (s.tp + s.fp + s.fn == 0) continue;
    const Quality q = category_quality(s);
    result.per_category[meta.id] = q;
    accumulate(result.all, q);
    accumulate(meta.is_thing ? result.things : result.stuff, q);
  }
  finish(result.all);
  finish(result.things);
  finish(result.stuff);
  result.empty = result.all.categories == 0;
  return result;
}

std::string format_pq_table(const PQResult& result, const CategoryTable& categories) {
  std::string out = fmt::format("{:<14} {:>7} {:>7} {:>7} {:>4}\n", "", "PQ", "SQ", "RQ", "N");
  auto row = [&](const std::string& name, const Quality& q) {
    out += fmt::format("{:<14} {:>7.2f} {:>7.2f} {:>7.2f} {:>4}\n", name, 100 * q.pq,
                       100 * q.sq, 100 * q.rq, q.categories);
  };
  row("All", result.all);
  row("Things", result.things);
  row("Stuff", result.stuff);
  for (const auto& [id, q] : result.per_category) {
    const CategoryMeta* meta = categories.find(id);
    row(meta ? "  " + meta->name : fmt::format("  #{}", id), q);
  }
  if (result.empty) out += "(no categories scored)\n";
  return out;
}

std::string format_pq_keyvalue(const PQResult& result) {
  std::string out;
  auto emit = [&](const std::string& suffix, const Quality& q) {
    out += fmt::format("pq{} = {:.6f}\n", suffix, q.pq);
    out += fmt::format("sq{} = {:.6f}\n", suffix, q.sq);
    out += fmt::format("rq{} = {:.6f}\n", suffix, q.rq);
    out += fmt::format("n{} = {}\n", suffix, q.categories);
  };
  emit("", result.all);
  emit("_th", result.things);
  emit("_st", result.stuff);
  out += fmt::format("empty = {}\n", result.empty ? 1 : 0);
  return out;
}

}  // namespace aunet
