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

#include "aunet/panoptic_map.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace aunet {

CategoryTable::CategoryTable(std::vector<CategoryMeta> categories)
    : categories_(std::move(categories)) {
  validate();
}

void CategoryTable::validate() const {
  std::set<int> ids;
  for (const auto& c : categories_) {
    if (c.id == kVoidCategory) {
      throw std::invalid_argument(fmt::format("category '{}' uses the void id 0", c.name));
    }
    if (!ids.insert(c.id).second) {
      throw std::invalid_argument(fmt::format("duplicate category id {}", c.id));
    }
  }
  for (const auto& c : categories_) {
    for (int other : c.never_overlapped_by) {
      if (!ids.contains(other)) {
        throw std::invalid_argument(
            fmt::format("category {} relation references unknown id {}", c.id, other));
      }
    }
  }
}

const CategoryMeta* CategoryTable::find(int id) const {
  for (const auto& c : categories_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const CategoryMeta* CategoryTable::find(const std::string& name) const {
  for (const auto& c : categories_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const CategoryMeta& CategoryTable::at(int id) const {
  const CategoryMeta* c = find(id);
  if (!c) throw std::out_of_range(fmt::format("unknown category id {}", id));
  return *c;
}

bool CategoryTable::is_thing(int id) const { return at(id).is_thing; }

bool CategoryTable::protected_from(int candidate, int claimant) const {
  const CategoryMeta* c = find(candidate);
  if (!c) return false;
  return std::find(c->never_overlapped_by.begin(), c->never_overlapped_by.end(), claimant) !=
         c->never_overlapped_by.end();
}

void CategoryTable::add_relation(int candidate, int claimant) {
  at(claimant);
  for (auto& c : categories_) {
    if (c.id != candidate) continue;
    if (!protected_from(candidate, claimant)) c.never_overlapped_by.push_back(claimant);
    return;
  }
  throw std::out_of_range(fmt::format("unknown category id {}", candidate));
}

std::vector<int> CategoryTable::thing_ids() const {
  std::vector<int> ids;
  for (const auto& c : categories_) {
    if (c.is_thing) ids.push_back(c.id);
  }
  return ids;
}

std::vector<int> CategoryTable::stuff_ids() const {
  std::vector<int> ids;
  for (const auto& c : categories_) {
    if (!c.is_thing) ids.push_back(c.id);
  }
  return ids;
}

std::vector<Segment> extract_segments(const PanopticMap& map, const CategoryTable& categories) {
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<Segment> segments;
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int cat = map.category[p];
    if (cat == kVoidCategory) continue;
    const int inst = categories.is_thing(cat) ? map.instance[p] : 0;
    auto [it, inserted] = index.try_emplace({cat, inst}, segments.size());
    if (inserted) segments.push_back(Segment{cat, inst, {}});
    segments[it->second].pixels.push_back(static_cast<int>(p));
  }
  return segments;
}

void validate_panoptic(const PanopticMap& map, const CategoryTable& categories) {
  const std::size_t expected = static_cast<std::size_t>(map.height) * map.width;
  if (map.category.size() != expected || map.instance.size() != expected) {
    throw std::invalid_argument(fmt::format("panoptic map storage does not match {}x{}",
                                            map.height, map.width));
  }
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int cat = map.category[p];
    const int inst = map.instance[p];
    if (cat == kVoidCategory) {
      if (inst != 0) {
        throw std::invalid_argument(fmt::format("void pixel {} has instance {}", p, inst));
      }
      continue;
    }
    const CategoryMeta* meta = categories.find(cat);
    if (!meta) throw std::invalid_argument(fmt::format("pixel {} has unknown category {}", p, cat));
    if (meta->is_thing && inst < 1) {
      throw std::invalid_argument(fmt::format("thing pixel {} has instance {}", p, inst));
    }
    if (!meta->is_thing && inst != 0) {
      throw std::invalid_argument(fmt::format("stuff pixel {} has instance {}", p, inst));
    }
  }
}

}  // namespace aunet
