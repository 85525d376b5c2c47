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

#ifndef AUNET_BILINEAR_H_
#define AUNET_BILINEAR_H_

#include <cmath>

#include "aunet/tensor.h"

namespace aunet {

// One axis of a bilinear lookup at a continuous pixel-index coordinate
// (pixel centers at integers). Follows the RoIAlign border rule: points more
// than one pixel outside the grid are invalid; the rest clamp to the edge.
struct AxisTap {
  int lo = 0;
  int hi = 0;
  Real frac = 0;  // weight of `hi`, in [0, 1)
  bool valid = false;
};

inline AxisTap axis_tap(Real coord, int size) {
  AxisTap t;
  if (coord < -1.0 || coord > static_cast<Real>(size)) return t;
  t.valid = true;
  if (coord <= 0) coord = 0;
  t.lo = static_cast<int>(std::floor(coord));
  if (t.lo >= size - 1) {
    t.lo = t.hi = size - 1;
    t.frac = 0;
  } else {
    t.hi = t.lo + 1;
    t.frac = coord - t.lo;
  }
  return t;
}

// Half-pixel-center source coordinate for output index i when resampling an
// axis of `in` samples to `out` samples.
inline Real resize_source_coord(int i, int in, int out) {
  return (i + 0.5) * static_cast<Real>(in) / out - 0.5;
}

}  // namespace aunet

#endif  // AUNET_BILINEAR_H_
