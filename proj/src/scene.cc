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

#include "aunet/scene.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "aunet/panoptic_io.h"

namespace aunet {

namespace {

constexpr int kDisk = 1;
constexpr int kRectangle = 2;
constexpr int kTriangle = 3;
constexpr int kSky = 4;
constexpr int kGrass = 5;
constexpr int kRoad = 6;

using Color = std::array<double, 3>;

Color base_color(int category) {
  switch (category) {
    case kDisk: return {0.85, 0.20, 0.20};
    case kRectangle: return {0.92, 0.80, 0.18};
    case kTriangle: return {0.60, 0.30, 0.85};
    case kSky: return {0.45, 0.65, 0.95};
    case kGrass: return {0.25, 0.62, 0.25};
    default: return {0.45, 0.45, 0.45};
  }
}

int shape_category(ThingShape s) {
  switch (s) {
    case ThingShape::kDisk: return kDisk;
    case ThingShape::kRectangle: return kRectangle;
    case ThingShape::kTriangle: return kTriangle;
  }
  return kDisk;
}

struct PlacedThing {
  int category = 0;
  double cx = 0, cy = 0;  // center, continuous coordinates
  double width = 0, height = 0;
  Color color{};
};

bool covers(const PlacedThing& t, double x, double y) {
  const double dx = x - t.cx;
  const double dy = y - t.cy;
  switch (t.category) {
    case kDisk: {
      const double r = t.width / 2;
      return dx * dx + dy * dy <= r * r;
    }
    case kRectangle:
      return std::abs(dx) <= t.width / 2 && std::abs(dy) <= t.height / 2;
    default: {
      // Apex at the top center; base along the bottom edge.
      const double top = t.cy - t.height / 2;
      const double depth = (y - top) / t.height;
      if (depth < 0 || depth > 1) return false;
      return std::abs(dx) <= depth * t.width / 2;
    }
  }
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

CategoryTable synthetic_categories() {
  return CategoryTable({{kDisk, "disk", true, {}},
                        {kRectangle, "rectangle", true, {}},
                        {kTriangle, "triangle", true, {}},
                        {kSky, "sky", false, {}},
                        {kGrass, "grass", false, {}},
                        {kRoad, "road", false, {}}});
}

void annotate_things(Scene& scene, const CategoryTable& categories, int mask_resolution) {
  scene.rois.clear();
  scene.masks.clear();
  const PanopticMap& map = scene.panoptic;
  std::vector<Segment> things;
  for (auto& s : extract_segments(map, categories)) {
    if (categories.is_thing(s.category_id)) things.push_back(std::move(s));
  }
  std::sort(things.begin(), things.end(),
            [](const Segment& a, const Segment& b) { return a.instance_id < b.instance_id; });
  for (const Segment& s : things) {
    int x0 = map.width, y0 = map.height, x1 = -1, y1 = -1;
    Tensor binary(Shape{1, 1, map.height, map.width});
    for (int p : s.pixels) {
      const int y = p / map.width;
      const int x = p % map.width;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
      binary[p] = 1.0;
    }
    RoI roi;
    roi.box = Box{static_cast<Real>(x0), static_cast<Real>(y0), static_cast<Real>(x1 + 1),
                  static_cast<Real>(y1 + 1)};
    roi.class_id = s.category_id;
    roi.score = 1.0;
    Tensor crop = roi_align_forward(binary, roi, mask_resolution, 1.0);
    for (Real& v : crop.data()) v = v >= 0.5 ? 1.0 : 0.0;
    scene.rois.push_back(roi);
    scene.masks.push_back(std::move(crop));
  }
}

Scene generate_scene(const SceneSpec& spec, int mask_resolution) {
  if (spec.height < 8 || spec.width < 8) {
    throw std::invalid_argument("scene canvas must be at least 8x8");
  }
  if (spec.min_things < 0 || spec.max_things < spec.min_things) {
    throw std::invalid_argument("scene thing count range is invalid");
  }
  if (spec.stuff_bands < 1 || spec.stuff_bands > 3) {
    throw std::invalid_argument("scene needs 1 to 3 stuff bands");
  }
  if (spec.max_things > 0 && spec.shapes.empty()) {
    throw std::invalid_argument("scene has things but no shapes to draw");
  }
  if (spec.min_thing_size < 3 || spec.max_thing_size < spec.min_thing_size ||
      spec.max_thing_size > std::min(spec.height, spec.width)) {
    throw std::invalid_argument("scene thing size range does not fit the canvas");
  }
  const double capacity = 0.5 * spec.height * spec.width;
  if (spec.max_things * static_cast<double>(spec.min_thing_size) * spec.min_thing_size > capacity) {
    throw std::invalid_argument(fmt::format(
        "{} things of size >= {} exceed the capacity of a {}x{} canvas", spec.max_things,
        spec.min_thing_size, spec.width, spec.height));
  }

  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  Scene scene;
  scene.panoptic = PanopticMap(spec.height, spec.width);
  PanopticMap& map = scene.panoptic;

  // Stuff bands, top to bottom.
  const std::array<int, 3> band_categories{kSky, kGrass, kRoad};
  std::vector<int> boundaries;
  for (int b = 1; b < spec.stuff_bands; ++b) {
    const double center = static_cast<double>(b) / spec.stuff_bands;
    boundaries.push_back(static_cast<int>(std::round(
        spec.height * uniform(center - 0.12, center + 0.12))));
  }
  boundaries.push_back(spec.height);
  std::vector<int> band_of_row(spec.height);
  for (int y = 0, band = 0; y < spec.height; ++y) {
    while (y >= boundaries[band]) ++band;
    band_of_row[y] = band;
  }

  // Things; redraw the whole layout until every thing stays visible enough.
  const int thing_count = uniform_int(spec.min_things, spec.max_things);
  std::vector<PlacedThing> things;
  std::vector<int> owner(map.size(), -1);
  bool placed = thing_count == 0;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    things.clear();
    std::fill(owner.begin(), owner.end(), -1);
    for (int k = 0; k < thing_count; ++k) {
      PlacedThing t;
      t.category = shape_category(spec.shapes[uniform_int(0, static_cast<int>(spec.shapes.size()) - 1)]);
      t.width = uniform(spec.min_thing_size, spec.max_thing_size);
      t.height = t.category == kRectangle ? t.width * uniform(0.6, 1.0) : t.width;
      t.cx = uniform(t.width / 2, spec.width - t.width / 2);
      t.cy = uniform(t.height / 2, spec.height - t.height / 2);
      const Color base = base_color(t.category);
      for (int c = 0; c < 3; ++c) t.color[c] = base[c] + uniform(-0.08, 0.08);
      things.push_back(t);
    }
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        for (int k = 0; k < thing_count; ++k) {
          if (covers(things[k], x + 0.5, y + 0.5)) owner[map.index(y, x)] = k;
        }
    std::vector<int> visible(thing_count, 0);
    for (int o : owner) {
      if (o >= 0) ++visible[o];
    }
    placed = std::all_of(visible.begin(), visible.end(),
                         [&](int a) { return a >= spec.min_visible_area; });
  }
  if (!placed) {
    throw std::invalid_argument(fmt::format(
        "could not place {} visible things on a {}x{} canvas (seed {})", thing_count,
        spec.width, spec.height, spec.seed));
  }

  scene.image = Tensor(Shape{1, 3, spec.height, spec.width});
  const double road_dash = uniform(0, 8);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const std::size_t p = map.index(y, x);
      Color color;
      const int k = owner[p];
      if (k >= 0) {
        map.category[p] = things[k].category;
        map.instance[p] = k + 1;
        color = things[k].color;
      } else {
        const int cat = band_categories[band_of_row[y]];
        map.category[p] = cat;
        color = base_color(cat);
        if (cat == kSky) {
          const double shade = 0.15 * static_cast<double>(y) / spec.height;
          for (double& v : color) v += shade;
        } else if (cat == kGrass) {
          if ((x + y) % 4 < 2) color[1] += 0.08;
        } else if (static_cast<int>(x + road_dash) % 8 < 4 && y % 6 == 3) {
          color = {0.9, 0.9, 0.85};
        }
      }
      for (int c = 0; c < 3; ++c) {
        scene.image(0, c, y, x) = quantize(color[c] + uniform(-spec.noise, spec.noise));
      }
    }
  }
  for (int k = 0; k < thing_count; ++k) scene.draw_order.push_back(k + 1);
  annotate_things(scene, synthetic_categories(), mask_resolution);
  return scene;
}

std::vector<int> semantic_targets(const PanopticMap& map, const CategoryTable& categories) {
  std::vector<int> index_of_category;
  for (std::size_t i = 0; i < categories.all().size(); ++i) {
    const int id = categories.all()[i].id;
    if (id >= static_cast<int>(index_of_category.size())) index_of_category.resize(id + 1, -1);
    index_of_category[id] = static_cast<int>(i);
  }
  std::vector<int> targets(map.size(), -1);
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int cat = map.category[p];
    if (cat != kVoidCategory) targets[p] = index_of_category.at(cat);
  }
  return targets;
}

std::vector<SceneSpec> scene_split(std::uint64_t first_seed, int count, const SceneSpec& base) {
  std::vector<SceneSpec> specs;
  for (int i = 0; i < count; ++i) {
    SceneSpec s = base;
    s.seed = first_seed + static_cast<std::uint64_t>(i);
    specs.push_back(s);
  }
  return specs;
}

void save_scenes(const std::filesystem::path& dir, const std::vector<Scene>& scenes,
                 const CategoryTable& categories) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "panoptic");
  PanopticAnnotationSet set;
  set.categories = categories.all();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    const Shape shape = s.image.shape();
    RgbImage image(shape.w, shape.h);
    for (int y = 0; y < shape.h; ++y)
      for (int x = 0; x < shape.w; ++x)
        for (int c = 0; c < 3; ++c) {
          image.pixel(y, x)[c] =
              static_cast<std::uint8_t>(std::lround(s.image(0, c, y, x) * 255.0));
        }
    const std::string stem = fmt::format("{:06d}", i);
    write_png(dir / "images" / (stem + ".png"), image);
    EncodedPanoptic encoded = encode_panoptic(s.panoptic, categories);
    write_png(dir / "panoptic" / (stem + ".png"), encoded.image);
    set.images.push_back(ImageAnnotation{static_cast<int>(i), "images/" + stem + ".png",
                                         "panoptic/" + stem + ".png", shape.w, shape.h,
                                         std::move(encoded.records)});
  }
  save_annotation_set(dir / "annotations.json", set);
}

std::vector<Scene> load_scenes(const std::filesystem::path& dir, const CategoryTable& categories,
                               int mask_resolution) {
  const PanopticAnnotationSet set = load_annotation_set(dir / "annotations.json");
  std::vector<Scene> scenes;
  for (const auto& ann : set.images) {
    Scene s;
    const RgbImage image = read_png(dir / ann.file_name);
    s.image = Tensor(Shape{1, 3, image.height, image.width});
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        for (int c = 0; c < 3; ++c) s.image(0, c, y, x) = image.pixel(y, x)[c] / 255.0;
    s.panoptic = decode_panoptic(read_png(dir / ann.segmentation_file), ann.segments, categories);
    annotate_things(s, categories, mask_resolution);
    for (std::size_t k = 0; k < s.rois.size(); ++k) s.draw_order.push_back(static_cast<int>(k) + 1);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace aunet
