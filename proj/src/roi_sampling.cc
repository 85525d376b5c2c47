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

#include "aunet/roi_sampling.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "aunet/bilinear.h"

namespace aunet {

std::string RoI::str() const {
  return fmt::format("RoI(batch={}, box=[{:.3f},{:.3f},{:.3f},{:.3f}], class={}, level={})",
                     batch_index, box.x1, box.y1, box.x2, box.y2, class_id, level);
}

InverseBilinearWeights inverse_bilinear_weights(Real x_p, Real y_p) {
  if (!(x_p >= 0 && x_p < 1) || !(y_p >= 0 && y_p < 1)) {
    throw std::invalid_argument(
        fmt::format("inverse bilinear offsets must lie in [0,1), got ({}, {})", x_p, y_p));
  }
  InverseBilinearWeights r;
  r.value_x = x_p * x_p + (1 - x_p) * (1 - x_p);
  r.value_y = y_p * y_p + (1 - y_p) * (1 - y_p);
  const Real norm = r.value_x * r.value_y;
  r.weights = {(1 - x_p) * (1 - y_p) / norm, (1 - x_p) * y_p / norm,
               x_p * (1 - y_p) / norm, x_p * y_p / norm};
  return r;
}

namespace {

// Sample taps along one axis of an RoI: index j * kSamplesPerAxis + s holds
// the tap of sub-sample s in bin j.
std::vector<AxisTap> roi_axis_taps(Real start, Real length, int bins, int size) {
  const Real bin = length / bins;
  std::vector<AxisTap> taps(static_cast<std::size_t>(bins) * kSamplesPerAxis);
  for (int j = 0; j < bins; ++j) {
    for (int s = 0; s < kSamplesPerAxis; ++s) {
      const Real coord = start + (j + (s + 0.5) / kSamplesPerAxis) * bin;
      taps[static_cast<std::size_t>(j) * kSamplesPerAxis + s] = axis_tap(coord, size);
    }
  }
  return taps;
}

struct RoiTaps {
  std::vector<AxisTap> y;
  std::vector<AxisTap> x;
};

RoiTaps roi_taps(const RoI& roi, int bins, Real spatial_scale, int height, int width) {
  const Real x1 = roi.box.x1 * spatial_scale - 0.5;
  const Real y1 = roi.box.y1 * spatial_scale - 0.5;
  const Real w = roi.box.width() * spatial_scale;
  const Real h = roi.box.height() * spatial_scale;
  if (!(w > 0) || !(h > 0)) {
    throw std::invalid_argument(fmt::format("degenerate {} at spatial scale {}", roi.str(),
                                            spatial_scale));
  }
  return {roi_axis_taps(y1, h, bins, height), roi_axis_taps(x1, w, bins, width)};
}

void check_batch(const RoI& roi, const Shape& s) {
  if (roi.batch_index < 0 || roi.batch_index >= s.n) {
    throw std::invalid_argument(
        fmt::format("{} batch index outside feature batch {}", roi.str(), s.n));
  }
}

constexpr Real kSamplesPerBin = kSamplesPerAxis * kSamplesPerAxis;

Real share_factor(SampleShare share) {
  return share == SampleShare::kQuarter ? 1.0 / kSamplesPerBin : 1.0;
}

}  // namespace

Tensor roi_align_forward(const Tensor& features, const RoI& roi, int out_size,
                         Real spatial_scale) {
  const Shape fs = features.shape();
  check_batch(roi, fs);
  const RoiTaps taps = roi_taps(roi, out_size, spatial_scale, fs.h, fs.w);
  Tensor out(Shape{1, fs.c, out_size, out_size});
  for (int c = 0; c < fs.c; ++c) {
    const Real* in = features.plane(roi.batch_index, c);
    for (int by = 0; by < out_size; ++by) {
      for (int bx = 0; bx < out_size; ++bx) {
        Real acc = 0;
        for (int sy = 0; sy < kSamplesPerAxis; ++sy) {
          const AxisTap& ty = taps.y[by * kSamplesPerAxis + sy];
          if (!ty.valid) continue;
          for (int sx = 0; sx < kSamplesPerAxis; ++sx) {
            const AxisTap& tx = taps.x[bx * kSamplesPerAxis + sx];
            if (!tx.valid) continue;
            const Real* r0 = in + static_cast<std::size_t>(ty.lo) * fs.w;
            const Real* r1 = in + static_cast<std::size_t>(ty.hi) * fs.w;
            acc += (1 - ty.frac) * ((1 - tx.frac) * r0[tx.lo] + tx.frac * r0[tx.hi]) +
                   ty.frac * ((1 - tx.frac) * r1[tx.lo] + tx.frac * r1[tx.hi]);
          }
        }
        out(0, c, by, bx) = acc / kSamplesPerBin;
      }
    }
  }
  return out;
}

void roi_align_backward(const Tensor& grad_out, const RoI& roi, Real spatial_scale,
                        Tensor& grad_features) {
  const Shape fs = grad_features.shape();
  const int out_size = grad_out.shape().h;
  check_batch(roi, fs);
  const RoiTaps taps = roi_taps(roi, out_size, spatial_scale, fs.h, fs.w);
  for (int c = 0; c < fs.c; ++c) {
    Real* d = grad_features.plane(roi.batch_index, c);
    for (int by = 0; by < out_size; ++by) {
      for (int bx = 0; bx < out_size; ++bx) {
        const Real v = grad_out(0, c, by, bx) / kSamplesPerBin;
        for (int sy = 0; sy < kSamplesPerAxis; ++sy) {
          const AxisTap& ty = taps.y[by * kSamplesPerAxis + sy];
          if (!ty.valid) continue;
          for (int sx = 0; sx < kSamplesPerAxis; ++sx) {
            const AxisTap& tx = taps.x[bx * kSamplesPerAxis + sx];
            if (!tx.valid) continue;
            Real* r0 = d + static_cast<std::size_t>(ty.lo) * fs.w;
            Real* r1 = d + static_cast<std::size_t>(ty.hi) * fs.w;
            r0[tx.lo] += v * (1 - ty.frac) * (1 - tx.frac);
            r0[tx.hi] += v * (1 - ty.frac) * tx.frac;
            r1[tx.lo] += v * ty.frac * (1 - tx.frac);
            r1[tx.hi] += v * ty.frac * tx.frac;
          }
        }
      }
    }
  }
}

namespace {

bool outside_canvas(const RoI& roi, Real spatial_scale, const Shape& canvas) {
  const Real x1 = roi.box.x1 * spatial_scale;
  const Real y1 = roi.box.y1 * spatial_scale;
  const Real x2 = roi.box.x2 * spatial_scale;
  const Real y2 = roi.box.y2 * spatial_scale;
  return x2 <= 0 || y2 <= 0 || x1 >= canvas.w || y1 >= canvas.h;
}

// Visits every (bin, sample, neighbour) triple of one mask together with the
// inverse bilinear weight linking the sample to that canvas cell.
template <typename Visit>
void for_each_scatter_target(const RoI& roi, int bins, Real spatial_scale,
                             const Shape& canvas, Visit&& visit) {
  const RoiTaps taps = roi_taps(roi, bins, spatial_scale, canvas.h, canvas.w);
  for (int by = 0; by < bins; ++by) {
    for (int sy = 0; sy < kSamplesPerAxis; ++sy) {
      const AxisTap& ty = taps.y[by * kSamplesPerAxis + sy];
      if (!ty.valid) continue;
      for (int bx = 0; bx < bins; ++bx) {
        for (int sx = 0; sx < kSamplesPerAxis; ++sx) {
          const AxisTap& tx = taps.x[bx * kSamplesPerAxis + sx];
          if (!tx.valid) continue;
          const InverseBilinearWeights w = inverse_bilinear_weights(tx.frac, ty.frac);
          const std::size_t bin = static_cast<std::size_t>(by) * bins + bx;
          const std::size_t r0 = static_cast<std::size_t>(ty.lo) * canvas.w;
          const std::size_t r1 = static_cast<std::size_t>(ty.hi) * canvas.w;
          visit(bin, r0 + tx.lo, w.weights[0]);
          visit(bin, r1 + tx.lo, w.weights[1]);
          visit(bin, r0 + tx.hi, w.weights[2]);
          visit(bin, r1 + tx.hi, w.weights[3]);
        }
      }
    }
  }
}

void check_mask(const Tensor& mask, const Shape& canvas, std::size_t r) {
  const Shape ms = mask.shape();
  if (ms.c != canvas.c || ms.h != ms.w) {
    throw std::invalid_argument(fmt::format(
        "roi_upsample: mask {} has shape {}, expected square with {} channels", r, ms.str(),
        canvas.c));
  }
}

}  // namespace

Tensor roi_upsample_forward(std::span<const MaskPatch> masks, const Shape& canvas,
                            Real spatial_scale, int level,
                            const RoiUpsampleOptions& options) {
  Tensor out(canvas);
  const Real share = share_factor(options.share);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    const MaskPatch& patch = masks[r];
    if (level >= 0 && patch.roi.level != level) continue;
    check_mask(patch.logits, canvas, r);
    check_batch(patch.roi, canvas);
    if (outside_canvas(patch.roi, spatial_scale, canvas)) {
      spdlog::debug("roi_upsample: {} lies outside the {} canvas, skipped", patch.roi.str(),
                    canvas.str());
      continue;
    }
    const int bins = patch.logits.shape().h;
    for (int c = 0; c < canvas.c; ++c) {
      Real* dst = out.plane(patch.roi.batch_index, c);
      const Real* src = patch.logits.plane(0, c);
      if (options.aggregation == CanvasAggregation::kSum) {
        for_each_scatter_target(patch.roi, bins, spatial_scale, canvas,
                                [&](std::size_t bin, std::size_t cell, Real w) {
                                  dst[cell] += share * src[bin] * w;
                                });
      } else {
        // Per-mask contribution first, then elementwise max into the canvas.
        std::vector<Real> local(canvas.plane(), 0.0);
        std::vector<bool> touched(canvas.plane(), false);
        for_each_scatter_target(patch.roi, bins, spatial_scale, canvas,
                                [&](std::size_t bin, std::size_t cell, Real w) {
                                  local[cell] += share * src[bin] * w;
                                  touched[cell] = touched[cell] || w != 0;
                                });
        for (std::size_t i = 0; i < local.size(); ++i) {
          if (touched[i]) dst[i] = std::max(dst[i], local[i]);
        }
      }
    }
  }
  return out;
}

int assign_scale(const RoI& roi, const ScaleAssignment& rule) {
  const Real area = roi.box.width() * roi.box.height();
  if (!(area > 0)) {
    throw std::invalid_argument(fmt::format("assign_scale: non-positive area for {}", roi.str()));
  }
  const Real level =
      rule.canonical_level + std::floor(std::log2(std::sqrt(area) / rule.canonical_size));
  return static_cast<int>(std::clamp<Real>(level, rule.min_level, rule.max_level));
}

Var roi_align(Graph& g, std::span<const PyramidLevel> levels, std::span<const RoI> rois,
              int out_size, int first_level) {
  if (levels.empty() || rois.empty()) {
    throw std::invalid_argument("roi_align: needs at least one level and one RoI");
  }
  auto level_index = [&](const RoI& roi) -> std::size_t {
    if (levels.size() == 1) return 0;
    const int idx = roi.level - first_level;
    if (idx < 0 || static_cast<std::size_t>(idx) >= levels.size()) {
      throw std::invalid_argument(fmt::format("roi_align: {} has no matching level", roi.str()));
    }
    return static_cast<std::size_t>(idx);
  };
  const int channels = g.shape(levels[0].features).c;
  Tensor out(Shape{static_cast<int>(rois.size()), channels, out_size, out_size});
  const std::size_t per_roi = static_cast<std::size_t>(channels) * out_size * out_size;
  std::vector<Var> inputs;
  for (const auto& l : levels) {
    if (g.shape(l.features).c != channels) {
      throw std::invalid_argument("roi_align: pyramid levels differ in channel count");
    }
    inputs.push_back(l.features);
  }
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const PyramidLevel& l = levels[level_index(rois[r])];
    const Tensor one = roi_align_forward(g.value(l.features), rois[r], out_size, l.spatial_scale);
    std::copy(one.data().begin(), one.data().end(), out.data().begin() + r * per_roi);
  }
  std::vector<PyramidLevel> saved_levels(levels.begin(), levels.end());
  std::vector<RoI> saved_rois(rois.begin(), rois.end());
  std::vector<std::size_t> routes;
  for (const RoI& roi : rois) routes.push_back(level_index(roi));
  return g.record(std::move(out), inputs,
                  [saved_levels, saved_rois, routes, per_roi, channels, out_size](
                      Graph& g, const Tensor& go) {
    for (std::size_t r = 0; r < saved_rois.size(); ++r) {
      const PyramidLevel& l = saved_levels[routes[r]];
      if (!g.requires_grad(l.features)) continue;
      Tensor slice(Shape{1, channels, out_size, out_size},
                   std::vector<Real>(go.data().begin() + r * per_roi,
                                     go.data().begin() + (r + 1) * per_roi));
      roi_align_backward(slice, saved_rois[r], l.spatial_scale, g.grad_buffer(l.features));
    }
  });
}

Var roi_upsample(Graph& g, Var masks, std::span<const RoI> rois, const Shape& canvas,
                 Real spatial_scale, int level, const RoiUpsampleOptions& options) {
  const Shape ms = g.shape(masks);
  if (static_cast<std::size_t>(ms.n) != rois.size()) {
    throw std::invalid_argument(
        fmt::format("roi_upsample: {} masks for {} RoIs", ms.n, rois.size()));
  }
  if (options.aggregation != CanvasAggregation::kSum) {
    throw std::invalid_argument("roi_upsample: max aggregation is visualization-only");
  }
  const std::size_t per_mask = static_cast<std::size_t>(ms.c) * ms.h * ms.w;
  std::vector<MaskPatch> patches;
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const auto& mv = g.value(masks).data();
    patches.push_back(MaskPatch{rois[r], Tensor(Shape{1, ms.c, ms.h, ms.w},
                                                std::vector<Real>(mv.begin() + r * per_mask,
                                                                  mv.begin() + (r + 1) * per_mask))});
  }
  Tensor out = roi_upsample_forward(patches, canvas, spatial_scale, level, options);
  std::vector<RoI> saved(rois.begin(), rois.end());
  const Real share = share_factor(options.share);
  return g.record(std::move(out), {masks},
                  [masks, saved, canvas, spatial_scale, level, share, ms, per_mask](
                      Graph& g, const Tensor& go) {
    Tensor& dm = g.grad_buffer(masks);
    const std::size_t bin_plane = static_cast<std::size_t>(ms.h) * ms.w;
    for (std::size_t r = 0; r < saved.size(); ++r) {
      const RoI& roi = saved[r];
      if (level >= 0 && roi.level != level) continue;
      if (outside_canvas(roi, spatial_scale, canvas)) continue;
      for (int c = 0; c < ms.c; ++c) {
        const Real* gp = go.plane(roi.batch_index, c);
        Real* d = dm.data().data() + r * per_mask + c * bin_plane;
        for_each_scatter_target(roi, ms.h, spatial_scale, canvas,
                                [&](std::size_t bin, std::size_t cell, Real w) {
                                  d[bin] += share * w * gp[cell];
                                });
      }
    }
  });
}

}  // namespace aunet
