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

#include "aunet/heatmap.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace aunet {

std::array<std::uint8_t, 3> palette_color(Palette palette, double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (palette == Palette::kGray) {
    const auto v = static_cast<std::uint8_t>(std::lround(t * 255.0));
    return {v, v, v};
  }
  static constexpr std::array<std::array<double, 3>, 5> kStops{{
      {0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}}};
  const double scaled = t * (kStops.size() - 1);
  const int lo = std::min(static_cast<int>(scaled), static_cast<int>(kStops.size()) - 2);
  const double frac = scaled - lo;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = kStops[lo][c] * (1 - frac) + kStops[lo + 1][c] * frac;
    out[c] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

Heatmap render_heatmap(const Tensor& map, Palette palette, int upscale) {
  const Shape s = map.shape();
  if (s.n != 1 || s.c != 1) {
    throw std::invalid_argument("heatmap expects a [1, 1, H, W] map, got " + s.str());
  }
  if (upscale < 1) throw std::invalid_argument("heatmap upscale must be positive");
  if (!map.all_finite()) throw std::invalid_argument("heatmap input has non-finite values");

  const auto values = map.data();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  Heatmap out;
  out.constant = *lo == *hi;
  out.positions.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.positions[i] = out.constant ? 0.5 : (values[i] - *lo) / (*hi - *lo);
  }
  out.image = RgbImage(s.w * upscale, s.h * upscale);
  for (int y = 0; y < out.image.height; ++y) {
    for (int x = 0; x < out.image.width; ++x) {
      const auto color =
          palette_color(palette, out.positions[static_cast<std::size_t>(y / upscale) * s.w + x / upscale]);
      std::copy(color.begin(), color.end(), out.image.pixel(y, x));
    }
  }
  return out;
}

}  // namespace aunet
