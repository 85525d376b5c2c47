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

#include "aunet/fusion.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace aunet {

std::size_t InstancePrediction::area() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void sort_by_confidence(std::vector<InstancePrediction>& instances) {
  std::vector<std::size_t> areas;
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& inst : instances) areas.push_back(inst.area());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = instances[a];
    const auto& y = instances[b];
    if (x.score != y.score) return x.score > y.score;
    if (areas[a] != areas[b]) return areas[a] > areas[b];
    if (x.category_id != y.category_id) return x.category_id < y.category_id;
    return x.mask > y.mask;
  });
  std::vector<InstancePrediction> sorted;
  sorted.reserve(instances.size());
  for (std::size_t i : order) sorted.push_back(std::move(instances[i]));
  instances = std::move(sorted);
}

std::vector<InstancePrediction> resolve_overlaps(std::vector<InstancePrediction> instances,
                                                 const CategoryTable& categories,
                                                 const FusionParams& params) {
  if (instances.empty()) return {};
  const int h = instances.front().height;
  const int w = instances.front().width;
  for (const auto& inst : instances) {
    if (inst.height != h || inst.width != w ||
        inst.mask.size() != static_cast<std::size_t>(h) * w) {
      throw std::invalid_argument("resolve_overlaps: instance masks differ in size");
    }
  }
  sort_by_confidence(instances);

  std::vector<int> owner(static_cast<std::size_t>(h) * w, -1);
  std::vector<InstancePrediction> kept;
  for (auto& cand : instances) {
    const std::size_t area = cand.area();
    if (area == 0) continue;
    std::size_t available = 0;
    for (std::size_t p = 0; p < owner.size(); ++p) {
      if (!cand.mask[p]) continue;
      const int o = owner[p];
      if (o < 0 || categories.protected_from(cand.category_id, kept[o].category_id)) {
        ++available;
      }
    }
    if (static_cast<double>(available) < params.keep_fraction * area) continue;
    const int id = static_cast<int>(kept.size());
    for (std::size_t p = 0; p < owner.size(); ++p) {
      if (!cand.mask[p]) continue;
      const int o = owner[p];
      if (o < 0) {
        owner[p] = id;
      } else if (categories.protected_from(cand.category_id, kept[o].category_id)) {
        kept[o].mask[p] = 0;
        owner[p] = id;
      } else {
        cand.mask[p] = 0;
      }
    }
    kept.push_back(std::move(cand));
  }
  // Reclaims may have emptied an earlier instance.
  std::erase_if(kept, [](const InstancePrediction& i) { return i.area() == 0; });
  return kept;
}

namespace {

struct Components {
  std::vector<int> label;          // component per pixel, -1 if not stuff
  std::vector<std::size_t> area;
  std::vector<int> category;
};

Components stuff_components(const PanopticMap& map, const CategoryTable& categories) {
  Components comp;
  comp.label.assign(map.size(), -1);
  std::vector<int> stack;
  for (std::size_t start = 0; start < map.size(); ++start) {
    const int cat = map.category[start];
    if (cat == kVoidCategory || categories.is_thing(cat) || comp.label[start] >= 0) continue;
    const int id = static_cast<int>(comp.area.size());
    comp.area.push_back(0);
    comp.category.push_back(cat);
    stack.push_back(static_cast<int>(start));
    comp.label[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++comp.area[id];
      const int y = p / map.width;
      const int x = p % map.width;
      const int nbrs[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& n : nbrs) {
        if (n[0] < 0 || n[0] >= map.height || n[1] < 0 || n[1] >= map.width) continue;
        const std::size_t q = map.index(n[0], n[1]);
        if (comp.label[q] >= 0 || map.category[q] != cat || map.instance[q] != 0) continue;
        comp.label[q] = id;
        stack.push_back(static_cast<int>(q));
      }
    }
  }
  return comp;
}

}  // namespace

PanopticMap merge_panoptic(const std::vector<InstancePrediction>& resolved,
                           const SemanticMap& semantic, const CategoryTable& categories,
                           const FusionParams& params) {
  if (semantic.category.size() != static_cast<std::size_t>(semantic.height) * semantic.width) {
    throw std::invalid_argument("merge_panoptic: semantic map storage mismatch");
  }
  PanopticMap map(semantic.height, semantic.width);
  int next_id = 1;
  for (const auto& inst : resolved) {
    if (inst.height != map.height || inst.width != map.width) {
      throw std::invalid_argument("merge_panoptic: instance and semantic sizes differ");
    }
    if (!categories.is_thing(inst.category_id)) {
      throw std::invalid_argument(
          fmt::format("merge_panoptic: category {} is not a thing", inst.category_id));
    }
    const int id = next_id++;
    for (std::size_t p = 0; p < map.size(); ++p) {
      if (!inst.mask[p] || map.category[p] != kVoidCategory) continue;
      map.category[p] = inst.category_id;
      map.instance[p] = id;
    }
  }
  for (std::size_t p = 0; p < map.size(); ++p) {
    if (map.category[p] != kVoidCategory) continue;
    const int cat = semantic.category[p];
    if (cat != kVoidCategory && !categories.is_thing(cat)) map.category[p] = cat;
  }

  const Components comp = stuff_components(map, categories);
  const auto small = [&](int c) {
    return comp.area[c] < static_cast<std::size_t>(params.stuff_area_min);
  };
  std::vector<int> relabel(comp.area.size(), -2);  // -2: unchanged
  for (std::size_t c = 0; c < comp.area.size(); ++c) {
    if (!small(static_cast<int>(c))) continue;
    int best = -1;
    for (std::size_t p = 0; p < map.size(); ++p) {
      if (comp.label[p] != static_cast<int>(c)) continue;
      const int y = static_cast<int>(p) / map.width;
      const int x = static_cast<int>(p) % map.width;
      const int nbrs[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& n : nbrs) {
        if (n[0] < 0 || n[0] >= map.height || n[1] < 0 || n[1] >= map.width) continue;
        const int other = comp.label[map.index(n[0], n[1])];
        if (other < 0 || other == static_cast<int>(c) || small(other)) continue;
        if (best < 0 || comp.area[other] > comp.area[best] ||
            (comp.area[other] == comp.area[best] && comp.category[other] < comp.category[best])) {
          best = other;
        }
      }
    }
    relabel[c] = best < 0 ? -1 : comp.category[best];
  }
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int c = comp.label[p];
    if (c < 0 || relabel[c] == -2) continue;
    map.category[p] = relabel[c] < 0 ? kVoidCategory : relabel[c];
  }
  validate_panoptic(map, categories);
  return map;
}

PanopticMap fuse(std::vector<InstancePrediction> instances, const SemanticMap& semantic,
                 const CategoryTable& categories, const FusionParams& params) {
  return merge_panoptic(resolve_overlaps(std::move(instances), categories, params), semantic,
                        categories, params);
}

namespace {

int resolve_category(const std::string& token, const CategoryTable& categories, int line) {
  if (const CategoryMeta* c = categories.find(token)) return c->id;
  try {
    std::size_t used = 0;
    const int id = std::stoi(token, &used);
    if (used == token.size() && categories.contains(id)) return id;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(fmt::format("relations line {}: unknown category '{}'", line, token));
}

}  // namespace

void load_relations(const std::string& text, CategoryTable& categories) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string candidate, relation, claimant, extra;
    if (!(fields >> candidate)) continue;
    if (!(fields >> relation >> claimant) || relation != "never_overlapped_by" ||
        (fields >> extra)) {
      throw std::invalid_argument(fmt::format(
          "relations line {}: expected '<category> never_overlapped_by <category>'", number));
    }
    categories.add_relation(resolve_category(candidate, categories, number),
                            resolve_category(claimant, categories, number));
  }
}

}  // namespace aunet
