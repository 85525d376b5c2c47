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

#ifndef AUNET_PANOPTIC_IO_H_
#define AUNET_PANOPTIC_IO_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aunet/panoptic_map.h"

namespace aunet {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int y, int x) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int y, int x) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

// COCO panoptic id colour: id = R + 256 G + 65536 B.
std::uint32_t rgb_to_id(const std::uint8_t* rgb);
std::array<std::uint8_t, 3> id_to_rgb(std::uint32_t id);

// Uncompressed COCO RLE: column-major run lengths, starting with a run of
// zeros (possibly empty).
std::vector<std::uint32_t> encode_rle(const std::vector<std::uint8_t>& mask, int height, int width);
std::vector<std::uint8_t> decode_rle(const std::vector<std::uint32_t>& counts, int height,
                                     int width);

struct SegmentRecord {
  std::uint32_t id = 0;
  int category_id = 0;
  long area = 0;
  std::array<int, 4> bbox{};  // x, y, width, height
  bool iscrowd = false;
  int instance_id = -1;       // optional extension; -1 when absent
};

struct EncodedPanoptic {
  RgbImage image;
  std::vector<SegmentRecord> records;
};

// Segment ids follow raster order of first occurrence, starting at 1.
EncodedPanoptic encode_panoptic(const PanopticMap& map, const CategoryTable& categories);

// Throws std::runtime_error naming the offending ids when the image and the
// records disagree (unknown ids, unused records, area mismatches).
PanopticMap decode_panoptic(const RgbImage& image, const std::vector<SegmentRecord>& records,
                            const CategoryTable& categories);

struct ImageAnnotation {
  int image_id = 0;
  std::string file_name;          // RGB input image
  std::string segmentation_file;  // id image
  int width = 0;
  int height = 0;
  std::vector<SegmentRecord> segments;
};

struct PanopticAnnotationSet {
  std::vector<CategoryMeta> categories;
  std::vector<ImageAnnotation> images;
};

nlohmann::json to_json(const PanopticAnnotationSet& set);
PanopticAnnotationSet annotation_set_from_json(const nlohmann::json& doc);

void save_annotation_set(const std::filesystem::path& path, const PanopticAnnotationSet& set);
PanopticAnnotationSet load_annotation_set(const std::filesystem::path& path);

}  // namespace aunet

#endif  // AUNET_PANOPTIC_IO_H_
