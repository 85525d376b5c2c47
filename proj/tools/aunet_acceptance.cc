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

// Acceptance runner. Each criterion prints one line:
//   AC<n> PASS|FAIL <measurement>
// and the exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "aunet/attention.h"
#include "aunet/config.h"
#include "aunet/evaluate.h"
#include "aunet/fusion.h"
#include "aunet/grad_suite.h"
#include "aunet/metrics.h"
#include "aunet/model.h"
#include "aunet/panoptic_io.h"
#include "aunet/roi_sampling.h"
#include "aunet/train.h"
#include "oracles.h"

using namespace aunet;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome gradient_suites() {
  const auto start = Clock::now();
  std::vector<GradCheckReport> reports = run_operator_grad_suite();
  reports.push_back(run_model_grad_check());
  const double elapsed = seconds_since(start);
  double worst = 0;
  int failed = 0;
  for (const GradCheckReport& r : reports) {
    worst = std::max(worst, r.max_rel_error());
    failed += !r.passed();
  }
  if (failed > 0) std::cerr << format_grad_check_table(reports);
  return {failed == 0 && elapsed < 60.0,
          fmt::format("{} checks, {} failed, worst rel err {:.2e}, {:.1f} s (limit 60 s)",
                      reports.size(), failed, worst, elapsed)};
}

Outcome inverse_bilinear_recovery() {
  std::mt19937_64 rng(2001);
  std::uniform_real_distribution<Real> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Real x = u(rng), y = u(rng), v = 10 * u(rng) - 5;
    const InverseBilinearWeights w = inverse_bilinear_weights(x, y);
    const Real back = (1 - x) * (1 - y) * v * w.weights[0] + (1 - x) * y * v * w.weights[1] +
                      x * (1 - y) * v * w.weights[2] + x * y * v * w.weights[3];
    worst = std::max(worst, std::abs(back - v));
  }
  return {worst <= 1e-12, fmt::format("1000 offsets, max |error| {:.2e} (tol 1e-12)", worst)};
}

Outcome roi_round_trip() {
  std::mt19937_64 rng(2003);
  std::uniform_real_distribution<Real> unit(0, 1);
  double worst = 0;
  int rois = 0;
  for (int m : {14, 28}) {
    const int canvas = 5 * m;
    for (int trial = 0; trial < 100; ++trial, ++rois) {
      // Sub-samples at least two cells apart and clear of the border.
      const Real side = 4.0 * m + unit(rng) * (canvas - 4.0 * m - 3.0);
      const Real x1 = 1.0 + unit(rng) * (canvas - side - 2.0);
      const Real y1 = 1.0 + unit(rng) * (canvas - side - 2.0);
      MaskPatch patch;
      patch.roi.box = {x1, y1, x1 + side, y1 + side};
      patch.logits = testing::random_tensor({1, 1, m, m}, rng);
      const Tensor up = roi_upsample_forward(std::span(&patch, 1), Shape{1, 1, canvas, canvas}, 1.0);
      const Tensor back = roi_align_forward(up, patch.roi, m, 1.0);
      for (std::size_t i = 0; i < back.size(); ++i) {
        worst = std::max(worst, std::abs(back[i] - patch.logits[i]));
      }
    }
  }
  return {worst <= 1e-9,
          fmt::format("{} RoIs at m = 14 and 28, max |error| {:.2e} (tol 1e-9)", rois, worst)};
}

Outcome pq_against_brute_force() {
  const CategoryTable cats = testing::oracle_categories();
  std::mt19937_64 rng(2005);
  double worst = 0;
  int match_mismatches = 0, count_mismatches = 0, factor_violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto pair = testing::random_panoptic_pair(rng);
    const testing::OracleResult want = testing::brute_force_pq({pair}, cats);
    const MatchResult got = match_segments(pair.first, pair.second, cats);
    std::set<std::pair<int, int>> got_matches;
    for (const SegmentMatch& m : got.matches) {
      const Segment& p = got.pred_segments[m.pred_index];
      const Segment& g = got.gt_segments[m.gt_index];
      got_matches.emplace(p.category_id * 1000 + p.instance_id, g.category_id * 1000 + g.instance_id);
    }
    const std::set<std::pair<int, int>> want_matches(want.matches.begin(), want.matches.end());
    match_mismatches += got_matches != want_matches;
    const PQStats stats = evaluate_panoptic(pair.first, pair.second, cats);
    for (const auto& [cat, w] : want.per_category) {
      const CategoryStats c = stats.per_category.count(cat) ? stats.per_category.at(cat) : CategoryStats{};
      count_mismatches += c.tp != w.tp || c.fp != w.fp || c.fn != w.fn;
      worst = std::max(worst, std::abs(c.iou_sum - w.iou_sum));
    }
    const PQResult pq = compute_pq(stats, cats);
    worst = std::max({worst, std::abs(pq.all.pq - want.all.pq), std::abs(pq.things.pq - want.things.pq),
                      std::abs(pq.stuff.pq - want.stuff.pq)});
    for (const auto& [cat, q] : pq.per_category) factor_violations += q.pq != q.sq * q.rq;
  }
  const bool ok = match_mismatches == 0 && count_mismatches == 0 && factor_violations == 0 && worst <= 1e-12;
  return {ok, fmt::format("10000 pairs, {} matching and {} count mismatches, max |dPQ| {:.2e} "
                          "(tol 1e-12), {} PQ != SQ*RQ",
                          match_mismatches, count_mismatches, worst, factor_violations)};
}

bool is_partition(const testing::FusionCase& fc, const std::vector<InstancePrediction>& resolved,
                  const PanopticMap& map) {
  if (map.size() != fc.semantic.category.size()) return false;
  std::vector<int> owners(map.size(), 0);
  for (const auto& inst : resolved) {
    for (std::size_t p = 0; p < inst.mask.size(); ++p) owners[p] += inst.mask[p];
  }
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int cat = map.category[p];
    const bool thing = cat != kVoidCategory && fc.categories.is_thing(cat);
    if (owners[p] > 1) return false;
    if (cat != kVoidCategory && !fc.categories.contains(cat)) return false;
    if ((owners[p] == 1) != thing) return false;
    if ((map.instance[p] > 0) != thing) return false;
  }
  try {
    validate_panoptic(map, fc.categories);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

InstancePrediction strip(int n, int first, int last, int category, double score) {
  InstancePrediction p;
  p.height = 1;
  p.width = n;
  p.mask.assign(static_cast<std::size_t>(n), 0);
  for (int i = first; i <= last; ++i) p.mask[i - 1] = 1;
  p.category_id = category;
  p.score = score;
  return p;
}

bool tie_inside_person_survives() {
  CategoryTable cats({{1, "person", true, {}}, {2, "tie", true, {}}, {3, "sky", false, {}}});
  load_relations("tie never_overlapped_by person\n", cats);
  const InstancePrediction person = strip(60, 1, 60, 1, 0.9);
  const InstancePrediction tie = strip(60, 20, 30, 2, 0.6);
  const auto out = resolve_overlaps({tie, person}, cats, FusionParams{});
  if (out.size() != 2) return false;
  for (const auto& inst : out) {
    for (int i = 1; i <= 60; ++i) {
      const bool in_tie = i >= 20 && i <= 30;
      if (inst.mask[i - 1] != (inst.category_id == 2 ? in_tie : !in_tie)) return false;
    }
  }
  return true;
}

Outcome fusion_properties() {
  std::mt19937_64 rng(2007);
  int broken = 0, nondeterministic = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const testing::FusionCase fc = testing::random_fusion_case(rng);
    const auto resolved = resolve_overlaps(fc.instances, fc.categories, fc.params);
    const PanopticMap map = merge_panoptic(resolved, fc.semantic, fc.categories, fc.params);
    broken += !is_partition(fc, resolved, map);
    std::vector<InstancePrediction> shuffled = fc.instances;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    nondeterministic += !(fuse(shuffled, fc.semantic, fc.categories, fc.params) == map);
  }
  const bool tie = tie_inside_person_survives();
  return {broken == 0 && nondeterministic == 0 && tie,
          fmt::format("10000 cases, {} non-partitions, {} order-dependent; tie inside person {}",
                      broken, nondeterministic, tie ? "kept" : "lost")};
}

Outcome panoptic_codec() {
  const CategoryTable cats = testing::oracle_categories();
  std::mt19937_64 rng(2009);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const PanopticMap m = testing::random_panoptic_map(rng, 12 + trial % 9, 16 + trial % 5);
    const EncodedPanoptic e = encode_panoptic(m, cats);
    const PanopticMap back = decode_panoptic(e.image, e.records, cats);
    failures += !(back == m) || !(encode_panoptic(back, cats).image == e.image);
  }
  int rgb_failures = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto id = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    const auto rgb = id_to_rgb(id);
    rgb_failures += rgb[0] + 256u * rgb[1] + 65536u * rgb[2] != id || rgb_to_id(rgb.data()) != id;
  }
  return {failures == 0 && rgb_failures == 0,
          fmt::format("100 maps, {} round-trip failures; 100000 ids, {} RGB mismatches", failures,
                      rgb_failures)};
}

Outcome end_to_end() {
  const RunConfig config;
  const CategoryTable cats = synthetic_categories();
  const std::vector<Scene> train = make_split(config, Split::kTrain);
  const std::vector<Scene> eval_scenes = make_split(config, Split::kEval);
  EvalOptions options;
  options.fusion = config.fusion;

  Model untrained(config.model);
  const double pq_untrained = evaluate(untrained, eval_scenes, cats, options).pq.all.pq;

  const auto start = Clock::now();
  Model model(config.model);
  Trainer trainer(model, config.train, config.loss, cats);
  trainer.run(train);
  const EvalReport report = evaluate(model, eval_scenes, cats, options);
  const double elapsed = seconds_since(start);
  const double pq = report.pq.all.pq;
  return {pq >= 0.5 && pq_untrained < 0.2 && elapsed <= 600.0,
          fmt::format("PQ {:.3f} (need >= 0.5, things {:.3f}, stuff {:.3f}), untrained {:.3f} "
                      "(need < 0.2), {:.0f} s train+eval (limit 600 s)",
                      pq, report.pq.things.pq, report.pq.stuff.pq, pq_untrained, elapsed)};
}

Outcome cold_start_identity() {
  long checked = 0, off = 0;
  Model model(ModelConfig{});
  model.zero_attention_convolutions();
  for (std::uint64_t seed : {900000u, 900001u, 900002u}) {
    SceneSpec spec;
    spec.seed = seed;
    const Scene s = generate_scene(spec);
    Graph g;
    const ModelOutputs out = model.forward(g, s.image, s.rois);
    for (int k = 0; k < kNumLevels; ++k) {
      const Tensor& light = g.value(out.light_features[k]);
      const Tensor& p = g.value(out.pam[k]->output);
      const Tensor& m = g.value(out.mam[k]->output);
      for (std::size_t i = 0; i < light.size(); ++i, checked += 2) {
        off += p[i] != 0.75 * light[i];
        off += m[i] != 0.75 * p[i];
      }
    }
  }
  return {checked > 0 && off == 0,
          fmt::format("{} PAM/MAM outputs at zero-initialised convolutions, {} differ bitwise from "
                      "0.75 S",
                      checked, off)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria AC1-AC8"};
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "criteria to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};

  const std::vector<std::function<Outcome()>> checks{
      gradient_suites, inverse_bilinear_recovery, roi_round_trip, pq_against_brute_force,
      fusion_properties, panoptic_codec, end_to_end, cold_start_identity};
  bool all = true;
  for (int c : criteria) {
    Outcome o;
    try {
      o = checks[c - 1]();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    all = all && o.pass;
    std::cout << fmt::format("AC{} {} {}", c, o.pass ? "PASS" : "FAIL", o.detail) << std::endl;
  }
  return all ? 0 : 1;
}
