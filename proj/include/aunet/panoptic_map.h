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

#ifndef AUNET_PANOPTIC_MAP_H_
#define AUNET_PANOPTIC_MAP_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace aunet {

inline constexpr int kVoidCategory = 0;

struct CategoryMeta {
  int id = 0;
  std::string name;
  bool is_thing = false;
  // Categories that must never cover this one ("tie never_overlapped_by person").
  std::vector<int> never_overlapped_by;
};

class CategoryTable {
 public:
  CategoryTable() = default;
  explicit CategoryTable(std::vector<CategoryMeta> categories);

  const std::vector<CategoryMeta>& all() const { return categories_; }
  const CategoryMeta* find(int id) const;
  const CategoryMeta* find(const std::string& name) const;
  const CategoryMeta& at(int id) const;
  bool contains(int id) const { return find(id) != nullptr; }
  bool is_thing(int id) const;

  // True when `claimant` may not cover `candidate`.
  bool protected_from(int candidate, int claimant) const;
  void add_relation(int candidate, int claimant);

  std::vector<int> thing_ids() const;
  std::vector<int> stuff_ids() const;

 private:
  void validate() const;
  std::vector<CategoryMeta> categories_;
};

// Per-pixel (category, instance) labelling. Category 0 is void.
struct PanopticMap {
  int height = 0;
  int width = 0;
  std::vector<int> category;
  std::vector<int> instance;

  PanopticMap() = default;
  PanopticMap(int h, int w)
      : height(h), width(w),
        category(static_cast<std::size_t>(h) * w, kVoidCategory),
        instance(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t size() const { return category.size(); }
  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }

  friend bool operator==(const PanopticMap&, const PanopticMap&) = default;
};

struct Segment {
  int category_id = 0;
  int instance_id = 0;
  std::vector<int> pixels;  // ascending raster indices

  std::size_t area() const { return pixels.size(); }
};

// One segment per (category, instance); void pixels are not a segment. Stuff
// categories collapse to one segment each. Ordered by first raster pixel.
std::vector<Segment> extract_segments(const PanopticMap& map, const CategoryTable& categories);

// Throws std::invalid_argument when the map breaks the labelling rules:
// known categories, thing pixels with instance >= 1, stuff and void with 0.
void validate_panoptic(const PanopticMap& map, const CategoryTable& categories);

}  // namespace aunet

#endif  // AUNET_PANOPTIC_MAP_H_
