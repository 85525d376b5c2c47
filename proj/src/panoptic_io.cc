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

#include "aunet/panoptic_io.h"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace aunet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(fmt::format("failed writing {}", path.string()));
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixel(y, 0)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  RgbImage image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(fmt::format("failed reading {}", path.string()));
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  image = RgbImage(static_cast<int>(png_get_image_width(png, info)),
                   static_cast<int>(png_get_image_height(png, info)));
  for (int y = 0; y < image.height; ++y) png_read_row(png, image.pixel(y, 0), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

std::uint32_t rgb_to_id(const std::uint8_t* rgb) {
  return static_cast<std::uint32_t>(rgb[0]) + 256u * rgb[1] + 65536u * rgb[2];
}

std::array<std::uint8_t, 3> id_to_rgb(std::uint32_t id) {
  return {static_cast<std::uint8_t>(id % 256), static_cast<std::uint8_t>((id / 256) % 256),
          static_cast<std::uint8_t>((id / 65536) % 256)};
}

EncodedPanoptic encode_panoptic(const PanopticMap& map, const CategoryTable& categories) {
  validate_panoptic(map, categories);
  EncodedPanoptic out;
  out.image = RgbImage(map.width, map.height);
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<std::array<int, 4>> extents;  // x0, y0, x1, y1 inclusive
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::size_t p = map.index(y, x);
      if (map.category[p] == kVoidCategory) continue;
      auto [it, inserted] = index.try_emplace({map.category[p], map.instance[p]}, out.records.size());
      if (inserted) {
        SegmentRecord r;
        r.id = static_cast<std::uint32_t>(out.records.size() + 1);
        r.category_id = map.category[p];
        r.instance_id = map.instance[p];
        out.records.push_back(r);
        extents.push_back({x, y, x, y});
      }
      SegmentRecord& r = out.records[it->second];
      ++r.area;
      auto& e = extents[it->second];
      e = {std::min(e[0], x), std::min(e[1], y), std::max(e[2], x), std::max(e[3], y)};
      const auto rgb = id_to_rgb(r.id);
      std::copy(rgb.begin(), rgb.end(), out.image.pixel(y, x));
    }
  }
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& e = extents[i];
    out.records[i].bbox = {e[0], e[1], e[2] - e[0] + 1, e[3] - e[1] + 1};
  }
  return out;
}

PanopticMap decode_panoptic(const RgbImage& image, const std::vector<SegmentRecord>& records,
                            const CategoryTable& categories) {
  std::map<std::uint32_t, std::size_t> by_id;
  std::map<int, int> next_instance;
  std::vector<int> instance_of(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SegmentRecord& r = records[i];
    if (r.id == 0) throw std::runtime_error("segment id 0 is reserved for void");
    if (!by_id.emplace(r.id, i).second) {
      throw std::runtime_error(fmt::format("duplicate segment id {}", r.id));
    }
    const CategoryMeta* meta = categories.find(r.category_id);
    if (!meta) {
      throw std::runtime_error(
          fmt::format("segment {} has unknown category {}", r.id, r.category_id));
    }
    if (meta->is_thing) {
      instance_of[i] = r.instance_id >= 1 ? r.instance_id : ++next_instance[r.category_id];
    }
  }
  PanopticMap map(image.height, image.width);
  std::vector<long> counted(records.size(), 0);
  std::set<std::uint32_t> unknown;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint32_t id = rgb_to_id(image.pixel(y, x));
      if (id == 0) continue;
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        unknown.insert(id);
        continue;
      }
      const std::size_t p = map.index(y, x);
      map.category[p] = records[it->second].category_id;
      map.instance[p] = instance_of[it->second];
      ++counted[it->second];
    }
  }
  std::vector<std::uint32_t> unused, bad_area;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (counted[i] == 0) {
      unused.push_back(records[i].id);
    } else if (counted[i] != records[i].area) {
      bad_area.push_back(records[i].id);
    }
  }
  if (!unknown.empty() || !unused.empty() || !bad_area.empty()) {
    throw std::runtime_error(fmt::format(
        "panoptic integrity error: ids in image without record [{}]; records absent from "
        "image [{}]; area mismatch [{}]",
        fmt::join(unknown, ","), fmt::join(unused, ","), fmt::join(bad_area, ",")));
  }
  return map;
}

namespace {

nlohmann::json record_to_json(const SegmentRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"category_id", r.category_id},
                      {"area", r.area},
                      {"bbox", r.bbox},
                      {"iscrowd", r.iscrowd ? 1 : 0}};
  if (r.instance_id >= 0) j["instance_id"] = r.instance_id;
  return j;
}

SegmentRecord record_from_json(const nlohmann::json& j) {
  SegmentRecord r;
  r.id = j.at("id").get<std::uint32_t>();
  r.category_id = j.at("category_id").get<int>();
  r.area = j.at("area").get<long>();
  r.bbox = j.at("bbox").get<std::array<int, 4>>();
  r.iscrowd = j.value("iscrowd", 0) != 0;
  r.instance_id = j.value("instance_id", -1);
  return r;
}

}  // namespace

nlohmann::json to_json(const PanopticAnnotationSet& set) {
  nlohmann::json doc;
  doc["categories"] = nlohmann::json::array();
  for (const auto& c : set.categories) {
    nlohmann::json j = {{"id", c.id}, {"name", c.name}, {"isthing", c.is_thing ? 1 : 0}};
    if (!c.never_overlapped_by.empty()) j["never_overlapped_by"] = c.never_overlapped_by;
    doc["categories"].push_back(j);
  }
  doc["images"] = nlohmann::json::array();
  doc["annotations"] = nlohmann::json::array();
  for (const auto& img : set.images) {
    doc["images"].push_back({{"id", img.image_id},
                             {"file_name", img.file_name},
                             {"width", img.width},
                             {"height", img.height}});
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& r : img.segments) segs.push_back(record_to_json(r));
    doc["annotations"].push_back({{"image_id", img.image_id},
                                  {"file_name", img.segmentation_file},
                                  {"segments_info", segs}});
  }
  return doc;
}

PanopticAnnotationSet annotation_set_from_json(const nlohmann::json& doc) {
  PanopticAnnotationSet set;
  for (const auto& c : doc.at("categories")) {
    CategoryMeta meta;
    meta.id = c.at("id").get<int>();
    meta.name = c.at("name").get<std::string>();
    meta.is_thing = c.at("isthing").get<int>() != 0;
    meta.never_overlapped_by = c.value("never_overlapped_by", std::vector<int>{});
    set.categories.push_back(meta);
  }
  std::map<int, std::size_t> by_image;
  for (const auto& i : doc.at("images")) {
    ImageAnnotation a;
    a.image_id = i.at("id").get<int>();
    a.file_name = i.at("file_name").get<std::string>();
    a.width = i.at("width").get<int>();
    a.height = i.at("height").get<int>();
    by_image[a.image_id] = set.images.size();
    set.images.push_back(a);
  }
  for (const auto& ann : doc.at("annotations")) {
    const int image_id = ann.at("image_id").get<int>();
    auto it = by_image.find(image_id);
    if (it == by_image.end()) {
      throw std::runtime_error(fmt::format("annotation for unknown image {}", image_id));
    }
    ImageAnnotation& a = set.images[it->second];
    a.segmentation_file = ann.at("file_name").get<std::string>();
    for (const auto& s : ann.at("segments_info")) a.segments.push_back(record_from_json(s));
  }
  return set;
}

void save_annotation_set(const std::filesystem::path& path, const PanopticAnnotationSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << to_json(set).dump(1) << '\n';
}

PanopticAnnotationSet load_annotation_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  return annotation_set_from_json(nlohmann::json::parse(in));
}

std::vector<std::uint32_t> encode_rle(const std::vector<std::uint8_t>& mask, int height,
                                      int width) {
  if (mask.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("RLE mask size does not match its dimensions");
  }
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      const std::uint8_t v = mask[static_cast<std::size_t>(y) * width + x] ? 1 : 0;
      if (v != current) {
        counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

std::vector<std::uint8_t> decode_rle(const std::vector<std::uint32_t>& counts, int height,
                                     int width) {
  const std::size_t total = static_cast<std::size_t>(height) * width;
  std::vector<std::uint8_t> mask(total, 0);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : counts) {
    if (pos + run > total) throw std::invalid_argument("RLE counts exceed the mask size");
    for (std::uint32_t k = 0; k < run; ++k, ++pos) {
      const std::size_t y = pos % height;
      const std::size_t x = pos / height;
      mask[y * width + x] = value;
    }
    value ^= 1;
  }
  if (pos != total) throw std::invalid_argument("RLE counts do not cover the mask");
  return mask;
}

}  // namespace aunet
