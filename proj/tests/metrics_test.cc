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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "aunet/metrics.h"
#include "oracles.h"

namespace aunet {
namespace {

using testing::brute_force_pq;
using testing::oracle_categories;
using testing::random_panoptic_pair;

Segment segment_of(int begin, int end, int category = 1) {
  Segment s;
  s.category_id = category;
  s.pixels.resize(static_cast<std::size_t>(end - begin));
  std::iota(s.pixels.begin(), s.pixels.end(), begin);
  return s;
}

// Thing instance `id` of `category` painted over rows [y0, y1) x [x0, x1).
void paint(PanopticMap& m, int category, int id, int y0, int y1, int x0, int x1) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      m.category[m.index(y, x)] = category;
      m.instance[m.index(y, x)] = id;
    }
}

TEST(Iou, HandCountedExamples) {
  EXPECT_EQ(iou(segment_of(0, 100), segment_of(0, 100)), 1.0);
  EXPECT_EQ(iou(segment_of(0, 100), segment_of(100, 200)), 0.0);
  EXPECT_DOUBLE_EQ(iou(segment_of(0, 100), segment_of(25, 125)), 0.6);
}

TEST(CategoryQuality, FactorizationExamples) {
  const Quality a = category_quality({1, 0, 0, 0.6});
  EXPECT_DOUBLE_EQ(a.sq, 0.6);
  EXPECT_DOUBLE_EQ(a.rq, 1.0);
  EXPECT_DOUBLE_EQ(a.pq, 0.6);
  const Quality b = category_quality({1, 1, 0, 0.75});
  EXPECT_DOUBLE_EQ(b.pq, 0.5);
}

TEST(MatchSegments, PerfectPredictionScoresOne) {
  const CategoryTable cats = oracle_categories();
  PanopticMap gt(8, 8);
  paint(gt, 4, 0, 0, 8, 0, 8);
  paint(gt, 1, 1, 1, 4, 1, 4);
  paint(gt, 2, 2, 4, 7, 3, 8);
  const MatchResult r = match_segments(gt, gt, cats);
  EXPECT_EQ(r.matches.size(), 3u);
  EXPECT_TRUE(r.false_positives.empty());
  EXPECT_TRUE(r.false_negatives.empty());
  const PQResult pq = compute_pq(evaluate_panoptic(gt, gt, cats), cats);
  for (const auto& [cat, q] : pq.per_category) {
    EXPECT_EQ(q.pq, 1.0) << cat;
    EXPECT_EQ(q.sq, 1.0) << cat;
    EXPECT_EQ(q.rq, 1.0) << cat;
  }
  EXPECT_EQ(pq.all.pq, 1.0);
}

TEST(MatchSegments, BelowThresholdIsOneFalsePositiveAndOneFalseNegative) {
  const CategoryTable cats = oracle_categories();
  PanopticMap gt(10, 10), pred(10, 10);
  paint(gt, 4, 0, 0, 10, 0, 10);
  paint(pred, 4, 0, 0, 10, 0, 10);
  // gt rows 0-4, pred rows 2-6 of a 10-wide strip: IoU 30/70.
  paint(gt, 1, 1, 0, 5, 0, 10);
  paint(pred, 1, 1, 2, 7, 0, 10);
  const PQStats stats = evaluate_panoptic(pred, gt, cats);
  const CategoryStats& c = stats.per_category.at(1);
  EXPECT_EQ(c.tp, 0);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 1);
}

TEST(MatchSegments, VoidCoveredPredictionIsIgnored) {
  const CategoryTable cats = oracle_categories();
  PanopticMap gt(6, 6), pred(6, 6);
  paint(gt, 5, 0, 3, 6, 0, 6);
  paint(pred, 5, 0, 3, 6, 0, 6);
  paint(pred, 2, 1, 0, 3, 0, 6);
  const MatchResult r = match_segments(pred, gt, cats);
  EXPECT_EQ(r.ignored_predictions.size(), 1u);
  EXPECT_TRUE(r.false_positives.empty());
}

TEST(MatchSegments, StuffInstancesMergePerCategory) {
  const CategoryTable cats = oracle_categories();
  PanopticMap gt(4, 4), pred(4, 4);
  paint(gt, 6, 0, 0, 4, 0, 4);
  paint(pred, 6, 0, 0, 4, 0, 2);
  paint(pred, 6, 3, 0, 4, 2, 4);
  const MatchResult r = match_segments(pred, gt, cats);
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0].iou, 1.0);
}

TEST(PQ, OracleEquivalencePerPair) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 1500; ++trial) {
    const auto pair = random_panoptic_pair(rng);
    const testing::OracleResult want = brute_force_pq({pair}, cats);
    const MatchResult got = match_segments(pair.first, pair.second, cats);

    std::set<std::pair<int, int>> got_matches, want_matches(want.matches.begin(),
                                                            want.matches.end());
    for (const SegmentMatch& m : got.matches) {
      const Segment& p = got.pred_segments[m.pred_index];
      const Segment& g = got.gt_segments[m.gt_index];
      got_matches.emplace(p.category_id * 1000 + p.instance_id,
                          g.category_id * 1000 + g.instance_id);
    }
    ASSERT_EQ(got_matches, want_matches) << "trial " << trial;

    const PQStats stats = evaluate_panoptic(pair.first, pair.second, cats);
    for (const auto& [cat, w] : want.per_category) {
      const CategoryStats c =
          stats.per_category.count(cat) ? stats.per_category.at(cat) : CategoryStats{};
      ASSERT_EQ(c.tp, w.tp) << "trial " << trial << " category " << cat;
      ASSERT_EQ(c.fp, w.fp) << "trial " << trial << " category " << cat;
      ASSERT_EQ(c.fn, w.fn) << "trial " << trial << " category " << cat;
      ASSERT_NEAR(c.iou_sum, w.iou_sum, 1e-12);
    }
    const PQResult pq = compute_pq(stats, cats);
    ASSERT_NEAR(pq.all.pq, want.all.pq, 1e-12);
    ASSERT_NEAR(pq.things.pq, want.things.pq, 1e-12);
    ASSERT_NEAR(pq.stuff.pq, want.stuff.pq, 1e-12);
  }
}

TEST(PQ, OracleEquivalenceAccumulated) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(127);
  std::vector<std::pair<PanopticMap, PanopticMap>> pairs;
  PQStats stats;
  for (int i = 0; i < 300; ++i) {
    pairs.push_back(random_panoptic_pair(rng));
    stats += evaluate_panoptic(pairs.back().first, pairs.back().second, cats);
  }
  const testing::OracleResult want = brute_force_pq(pairs, cats);
  const PQResult got = compute_pq(stats, cats);
  for (const auto& [cat, q] : want.quality) {
    EXPECT_NEAR(got.per_category.at(cat).pq, q.pq, 1e-12);
    EXPECT_NEAR(got.per_category.at(cat).sq, q.sq, 1e-12);
    EXPECT_NEAR(got.per_category.at(cat).rq, q.rq, 1e-12);
  }
  EXPECT_NEAR(got.all.pq, want.all.pq, 1e-12);
  EXPECT_NEAR(got.all.sq, want.all.sq, 1e-12);
  EXPECT_NEAR(got.all.rq, want.all.rq, 1e-12);
}

TEST(PQ, FactorizesAndStaysOrdered) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [pred, gt] = random_panoptic_pair(rng);
    const PQResult r = compute_pq(evaluate_panoptic(pred, gt, cats), cats);
    for (const auto& [cat, q] : r.per_category) {
      EXPECT_EQ(q.pq, q.sq * q.rq);
      EXPECT_GE(q.pq, 0.0);
      EXPECT_LE(q.pq, q.sq + 1e-15);
      EXPECT_LE(q.sq, 1.0);
      EXPECT_LE(q.rq, 1.0);
      EXPECT_GE(q.rq, 0.0);
    }
  }
}

TEST(PQ, MatchingIsUnique) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(137);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto [pred, gt] = random_panoptic_pair(rng);
    const MatchResult r = match_segments(pred, gt, cats);
    std::set<int> ps, gs;
    for (const SegmentMatch& m : r.matches) {
      ASSERT_TRUE(ps.insert(m.pred_index).second);
      ASSERT_TRUE(gs.insert(m.gt_index).second);
      ASSERT_GT(m.iou, 0.5);
    }
  }
}

PanopticMap permute_ids(const PanopticMap& m, std::mt19937_64& rng) {
  std::vector<int> ids(40);
  std::iota(ids.begin(), ids.end(), 1);
  std::shuffle(ids.begin(), ids.end(), rng);
  PanopticMap out = m;
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (out.instance[p] > 0) out.instance[p] = ids[(out.instance[p] - 1) % 40];
  }
  return out;
}

TEST(PQ, InstanceIdPermutationChangesNothing) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [pred, gt] = random_panoptic_pair(rng);
    const PQResult a = compute_pq(evaluate_panoptic(pred, gt, cats), cats);
    const PQResult b =
        compute_pq(evaluate_panoptic(permute_ids(pred, rng), permute_ids(gt, rng), cats), cats);
    ASSERT_EQ(a.per_category.size(), b.per_category.size());
    for (const auto& [cat, q] : a.per_category) {
      EXPECT_EQ(q.pq, b.per_category.at(cat).pq);
      EXPECT_EQ(q.sq, b.per_category.at(cat).sq);
    }
  }
}

TEST(PQ, EmptyInputIsFlagged) {
  const CategoryTable cats = oracle_categories();
  const PanopticMap blank(4, 4);
  const PQResult r = compute_pq(evaluate_panoptic(blank, blank, cats), cats);
  EXPECT_TRUE(r.empty);
  EXPECT_NE(format_pq_keyvalue(r).find("empty = 1"), std::string::npos);
}

}  // namespace
}  // namespace aunet
