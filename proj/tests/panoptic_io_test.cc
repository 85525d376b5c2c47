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
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "aunet/evaluate.h"
#include "aunet/heatmap.h"
#include "aunet/metrics.h"
#include "aunet/panoptic_io.h"
#include "aunet/scene.h"
#include "oracles.h"

namespace aunet {
namespace {

namespace fs = std::filesystem;
using testing::oracle_categories;
using testing::random_panoptic_map;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aunet_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(RgbId, HandExamples) {
  const std::uint8_t px[3] = {4, 1, 0};
  EXPECT_EQ(rgb_to_id(px), 260u);
  EXPECT_EQ(id_to_rgb(260), (std::array<std::uint8_t, 3>{4, 1, 0}));
  EXPECT_EQ(id_to_rgb(0x123456), (std::array<std::uint8_t, 3>{0x56, 0x34, 0x12}));
}

TEST(RgbId, BitExactOverRandomIds) {
  std::mt19937_64 rng(167);
  for (int i = 0; i < 100000; ++i) {
    const std::uint32_t id = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    const auto rgb = id_to_rgb(id);
    ASSERT_EQ(rgb[0] + 256u * rgb[1] + 65536u * rgb[2], id);
    ASSERT_EQ(rgb_to_id(rgb.data()), id);
  }
}

TEST(DecodePanoptic, BlackImageWithoutRecordsIsAllVoid) {
  const PanopticMap m = decode_panoptic(RgbImage(5, 3), {}, oracle_categories());
  EXPECT_EQ(m, PanopticMap(3, 5));
  EXPECT_TRUE(encode_panoptic(PanopticMap(3, 5), oracle_categories()).records.empty());
}

TEST(PanopticCodec, RoundTripOnRandomMaps) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(173);
  for (int trial = 0; trial < 100; ++trial) {
    const PanopticMap m = random_panoptic_map(rng, 12 + trial % 9, 16 + trial % 5);
    const EncodedPanoptic e = encode_panoptic(m, cats);
    ASSERT_EQ(decode_panoptic(e.image, e.records, cats), m);
    const EncodedPanoptic again = encode_panoptic(decode_panoptic(e.image, e.records, cats), cats);
    ASSERT_EQ(again.image, e.image);
    ASSERT_EQ(again.records.size(), e.records.size());
    for (std::size_t i = 0; i < e.records.size(); ++i) {
      EXPECT_EQ(again.records[i].id, e.records[i].id);
      EXPECT_EQ(again.records[i].area, e.records[i].area);
      EXPECT_EQ(again.records[i].bbox, e.records[i].bbox);
    }
  }
}

TEST(PanopticCodec, RecordsMatchImageContents) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(179);
  for (int trial = 0; trial < 50; ++trial) {
    const EncodedPanoptic e = encode_panoptic(random_panoptic_map(rng, 16, 16), cats);
    std::map<std::uint32_t, long> counts;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const std::uint32_t id = rgb_to_id(e.image.pixel(y, x));
        if (id) ++counts[id];
      }
    ASSERT_EQ(counts.size(), e.records.size());
    for (const SegmentRecord& r : e.records) EXPECT_EQ(counts.at(r.id), r.area);
  }
}

TEST(PanopticCodec, RelabellingIdsDoesNotChangeTheMap) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(181);
  for (int trial = 0; trial < 50; ++trial) {
    const PanopticMap m = random_panoptic_map(rng, 10, 10);
    EncodedPanoptic e = encode_panoptic(m, cats);
    std::map<std::uint32_t, std::uint32_t> remap;
    for (SegmentRecord& r : e.records) {
      const std::uint32_t fresh = 1 + static_cast<std::uint32_t>(rng() % 0xFFFFFE);
      remap.emplace(r.id, fresh);
      r.id = fresh;
    }
    std::set<std::uint32_t> distinct;
    for (const auto& [_, v] : remap) distinct.insert(v);
    if (distinct.size() != remap.size()) continue;
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) {
        const std::uint32_t id = rgb_to_id(e.image.pixel(y, x));
        if (!id) continue;
        const auto rgb = id_to_rgb(remap.at(id));
        std::copy(rgb.begin(), rgb.end(), e.image.pixel(y, x));
      }
    EXPECT_EQ(decode_panoptic(e.image, e.records, cats), m);
  }
}

TEST(DecodePanoptic, IntegrityErrorsListIds) {
  const CategoryTable cats = oracle_categories();
  PanopticMap m(2, 2);
  m.category = {4, 4, 1, 1};
  m.instance = {0, 0, 1, 1};
  EncodedPanoptic e = encode_panoptic(m, cats);
  auto missing = e.records;
  missing.pop_back();
  try {
    decode_panoptic(e.image, missing, cats);
    FAIL() << "expected an integrity error";
  } catch (const std::runtime_error& err) {
    EXPECT_NE(std::string(err.what()).find("without record [2]"), std::string::npos) << err.what();
  }
  auto extra = e.records;
  extra.push_back(SegmentRecord{9, 5, 3, {}, false, -1});
  EXPECT_THROW(decode_panoptic(e.image, extra, cats), std::runtime_error);
  auto bad_area = e.records;
  bad_area[0].area = 3;
  EXPECT_THROW(decode_panoptic(e.image, bad_area, cats), std::runtime_error);
  auto unknown_cat = e.records;
  unknown_cat[0].category_id = 77;
  EXPECT_THROW(decode_panoptic(e.image, unknown_cat, cats), std::runtime_error);
}

TEST(Png, RoundTripIsLossless) {
  std::mt19937_64 rng(191);
  RgbImage img(7, 5);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng());
  const fs::path path = scratch_dir("png") / "x.png";
  write_png(path, img);
  EXPECT_EQ(read_png(path), img);
  EXPECT_THROW(read_png(path.parent_path() / "missing.png"), std::runtime_error);
}

TEST(AnnotationSet, JsonRoundTrip) {
  const CategoryTable cats = oracle_categories();
  std::mt19937_64 rng(193);
  PanopticAnnotationSet set;
  set.categories = cats.all();
  set.categories[0].never_overlapped_by = {2};
  for (int i = 0; i < 3; ++i) {
    ImageAnnotation a;
    a.image_id = i + 1;
    a.file_name = "img" + std::to_string(i) + ".png";
    a.segmentation_file = "pan" + std::to_string(i) + ".png";
    a.width = 16;
    a.height = 16;
    a.segments = encode_panoptic(random_panoptic_map(rng, 16, 16), cats).records;
    set.images.push_back(a);
  }
  const fs::path path = scratch_dir("json") / "annotations.json";
  save_annotation_set(path, set);
  const PanopticAnnotationSet back = load_annotation_set(path);
  ASSERT_EQ(back.images.size(), 3u);
  EXPECT_EQ(back.categories.size(), set.categories.size());
  EXPECT_EQ(back.categories[0].never_overlapped_by, std::vector<int>{2});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.images[i].file_name, set.images[i].file_name);
    ASSERT_EQ(back.images[i].segments.size(), set.images[i].segments.size());
    for (std::size_t k = 0; k < set.images[i].segments.size(); ++k) {
      const SegmentRecord& a = set.images[i].segments[k];
      const SegmentRecord& b = back.images[i].segments[k];
      EXPECT_EQ(a.id, b.id);
      EXPECT_EQ(a.category_id, b.category_id);
      EXPECT_EQ(a.area, b.area);
      EXPECT_EQ(a.bbox, b.bbox);
      EXPECT_EQ(a.instance_id, b.instance_id);
    }
  }
}

TEST(Rle, HandExampleStartsWithZeroRun) {
  // Column-major over a 2 x 3 mask: 1,0 | 1,1 | 0,0
  const std::vector<std::uint8_t> mask{1, 1, 0, 0, 1, 0};
  const auto counts = encode_rle(mask, 2, 3);
  EXPECT_EQ(counts, (std::vector<std::uint32_t>{0, 1, 1, 2, 2}));
  EXPECT_EQ(decode_rle(counts, 2, 3), mask);
}

TEST(Rle, RoundTripOnRandomMasks) {
  std::mt19937_64 rng(197);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng() % 12), w = 1 + static_cast<int>(rng() % 12);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w);
    const double p = (rng() % 100) / 100.0;
    for (auto& b : mask) b = (rng() % 1000) / 1000.0 < p;
    const auto counts = encode_rle(mask, h, w);
    ASSERT_EQ(std::accumulate(counts.begin(), counts.end(), 0u), mask.size());
    ASSERT_EQ(decode_rle(counts, h, w), mask);
  }
  EXPECT_THROW(decode_rle({3, 4}, 2, 2), std::invalid_argument);
  EXPECT_THROW(decode_rle({1, 1}, 2, 2), std::invalid_argument);
}

TEST(Scene, SameSeedIsBitwiseIdentical) {
  SceneSpec spec;
  spec.seed = 0;
  const Scene a = generate_scene(spec);
  const Scene b = generate_scene(spec);
  EXPECT_TRUE(bitwise_equal(a.image, b.image));
  EXPECT_EQ(a.panoptic, b.panoptic);
  ASSERT_EQ(a.masks.size(), b.masks.size());
  for (std::size_t i = 0; i < a.masks.size(); ++i) EXPECT_TRUE(bitwise_equal(a.masks[i], b.masks[i]));
  spec.seed = 1;
  EXPECT_FALSE(bitwise_equal(generate_scene(spec).image, a.image));
}

TEST(Scene, GroundTruthIsAValidPartition) {
  const CategoryTable cats = synthetic_categories();
  for (const SceneSpec& spec : scene_split(5000, 60)) {
    const Scene s = generate_scene(spec);
    EXPECT_NO_THROW(validate_panoptic(s.panoptic, cats));
    std::set<int> ids;
    for (std::size_t p = 0; p < s.panoptic.size(); ++p) {
      const int c = s.panoptic.category[p];
      ASSERT_NE(c, kVoidCategory);
      if (cats.is_thing(c)) ids.insert(s.panoptic.instance[p]);
    }
    EXPECT_EQ(ids.size(), s.rois.size());
    EXPECT_GE(static_cast<int>(s.rois.size()), spec.min_things);
    EXPECT_LE(static_cast<int>(s.rois.size()), spec.max_things);
    for (Real v : s.image.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      ASSERT_EQ(std::round(v * 255), v * 255);
    }
  }
}

TEST(Scene, ZeroThingsGivesPureStuffAndFusionReproducesIt) {
  const CategoryTable cats = synthetic_categories();
  SceneSpec spec;
  spec.seed = 42;
  spec.min_things = 0;
  spec.max_things = 0;
  const Scene s = generate_scene(spec);
  EXPECT_TRUE(s.rois.empty());
  for (int c : s.panoptic.category) EXPECT_FALSE(cats.is_thing(c));
  const ScenePrediction pred = oracle_prediction(s, cats, FusionParams{0.5, 0, 0.5});
  EXPECT_EQ(pred.panoptic, s.panoptic);
}

TEST(Scene, GroundTruthThroughFusionScoresOne) {
  const CategoryTable cats = synthetic_categories();
  PQStats stats;
  for (const SceneSpec& spec : scene_split(6000, 30)) {
    const Scene s = generate_scene(spec);
    stats += evaluate_panoptic(oracle_prediction(s, cats, FusionParams{0.5, 0, 0.5}).panoptic,
                               s.panoptic, cats);
  }
  EXPECT_EQ(compute_pq(stats, cats).all.pq, 1.0);
}

TEST(Scene, CapacityIsChecked) {
  SceneSpec spec;
  spec.max_things = 30;
  spec.min_thing_size = 12;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = SceneSpec{};
  spec.stuff_bands = 0;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
}

TEST(Scene, SaveLoadRoundTrip) {
  const CategoryTable cats = synthetic_categories();
  std::vector<Scene> scenes;
  for (const SceneSpec& spec : scene_split(7000, 4)) scenes.push_back(generate_scene(spec));
  const fs::path dir = scratch_dir("scenes");
  save_scenes(dir, scenes, cats);
  const std::vector<Scene> back = load_scenes(dir, cats, 14);
  ASSERT_EQ(back.size(), scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(back[i].image, scenes[i].image));
    EXPECT_EQ(back[i].panoptic, scenes[i].panoptic);
    ASSERT_EQ(back[i].rois.size(), scenes[i].rois.size());
    for (std::size_t k = 0; k < scenes[i].rois.size(); ++k) {
      EXPECT_EQ(back[i].rois[k].box.x1, scenes[i].rois[k].box.x1);
      EXPECT_EQ(back[i].rois[k].class_id, scenes[i].rois[k].class_id);
      EXPECT_TRUE(bitwise_equal(back[i].masks[k], scenes[i].masks[k]));
    }
  }
}

TEST(Heatmap, ConstantMapIsMidPaletteAndFlagged) {
  const Heatmap h = render_heatmap(Tensor({1, 1, 3, 4}, 2.0), Palette::kJet, 2);
  EXPECT_TRUE(h.constant);
  EXPECT_EQ(h.image.width, 8);
  EXPECT_EQ(h.image.height, 6);
  const auto mid = palette_color(Palette::kJet, 0.5);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) EXPECT_TRUE(std::equal(mid.begin(), mid.end(), h.image.pixel(y, x)));
}

TEST(Heatmap, TwoValueMapUsesBothExtremes) {
  for (Palette p : {Palette::kJet, Palette::kGray}) {
    const Heatmap h = render_heatmap(Tensor({1, 1, 1, 2}, {0.0, 1.0}), p);
    EXPECT_FALSE(h.constant);
    const auto lo = palette_color(p, 0.0), hi = palette_color(p, 1.0);
    EXPECT_TRUE(std::equal(lo.begin(), lo.end(), h.image.pixel(0, 0)));
    EXPECT_TRUE(std::equal(hi.begin(), hi.end(), h.image.pixel(0, 1)));
    EXPECT_NE(lo, hi);
  }
  EXPECT_EQ(palette_color(Palette::kGray, 0.0), (std::array<std::uint8_t, 3>{0, 0, 0}));
  EXPECT_EQ(palette_color(Palette::kGray, 1.0), (std::array<std::uint8_t, 3>{255, 255, 255}));
}

TEST(Heatmap, RejectsBadInput) {
  EXPECT_THROW(render_heatmap(Tensor({1, 2, 2, 2})), std::invalid_argument);
  EXPECT_THROW(render_heatmap(Tensor({1, 1, 2, 2}, NAN)), std::invalid_argument);
}

}  // namespace
}  // namespace aunet
