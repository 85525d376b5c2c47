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

#include "aunet/model.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "aunet/ops.h"

namespace aunet {

namespace {

Param he_param(const std::string& name, Shape shape, std::mt19937_64& rng) {
  const Real fan_in = static_cast<Real>(shape.c) * shape.h * shape.w;
  std::normal_distribution<Real> dist(0.0, std::sqrt(2.0 / fan_in));
  Tensor t(shape);
  for (Real& v : t.data()) v = dist(rng);
  return Param(name, std::move(t));
}

Param zero_param(const std::string& name, Shape shape) { return Param(name, Tensor(shape)); }

ConvBlock make_block(const std::string& name, int cin, int cout, int stride, int groups,
                     std::mt19937_64& rng) {
  ConvBlock b;
  b.w = he_param(name + ".w", {cout, cin, 3, 3}, rng);
  b.gamma = Param(name + ".gn_gamma", Tensor({cout, 1, 1, 1}, 1.0));
  b.beta = zero_param(name + ".gn_beta", {cout, 1, 1, 1});
  b.stride = stride;
  b.groups = groups;
  return b;
}

void append_block(std::vector<Param*>& out, ConvBlock& b) {
  out.push_back(&b.w);
  out.push_back(&b.gamma);
  out.push_back(&b.beta);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("model config: " + message);
}

}  // namespace

void ModelConfig::validate() const {
  require(image_channels > 0, "image_channels must be positive");
  for (int w : backbone_widths) {
    require(w > 0 && w % gn_groups == 0,
            fmt::format("backbone width {} not divisible by gn_groups {}", w, gn_groups));
  }
  require(gn_groups > 0, "gn_groups must be positive");
  require(fpn_channels > 0, "fpn_channels must be positive");
  require(rpn_channels > 0, "rpn_channels (C_r) must be positive");
  require(pam_hidden_channels > 0, "pam_hidden_channels (C'_r) must be positive");
  require(semantic_channels > 0 && semantic_channels % gn_groups == 0,
          fmt::format("semantic_channels {} not divisible by gn_groups {}", semantic_channels,
                      gn_groups));
  require(reweight_groups > 0 && semantic_channels % reweight_groups == 0,
          fmt::format("semantic_channels {} not divisible by reweight_groups {}",
                      semantic_channels, reweight_groups));
  require(mask_channels > 0, "mask_channels (C_m) must be positive");
  require(mask_resolution == 14 || mask_resolution == 28,
          fmt::format("mask_resolution must be 14 or 28, got {}", mask_resolution));
  require(fg_channels > 0 && fg_channels % gn_groups == 0,
          fmt::format("fg_channels {} not divisible by gn_groups {}", fg_channels, gn_groups));
  require(num_thing_classes > 0, "num_thing_classes must be positive");
  require(num_semantic_classes > num_thing_classes,
          "num_semantic_classes must exceed num_thing_classes");
  require(scale.min_level == kFirstLevel && scale.max_level == kFirstLevel + kNumLevels - 1,
          "scale assignment must cover levels 2-5");
  require(scale.canonical_size > 0, "canonical_size must be positive");
}

const std::vector<std::string>& ablation_row_names() {
  static const std::vector<std::string> kRows{"sep", "e2e", "PAM", "PAM_r", "MAM", "MAM_r", "AUNet"};
  return kRows;
}

ModelConfig config_for_row(const std::string& row, ModelConfig base) {
  base.e2e = row != "sep";
  base.pam = row == "PAM" || row == "PAM_r" || row == "AUNet";
  base.mam = row == "MAM" || row == "MAM_r" || row == "AUNet";
  base.reweight = row == "PAM_r" || row == "MAM_r" || row == "AUNet";
  if (row != "sep" && row != "e2e" && !base.pam && !base.mam) {
    throw std::invalid_argument("unknown ablation row '" + row + "'");
  }
  return base;
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.init_seed);
  const int tower_count = config_.e2e ? 1 : 2;
  for (int t = 0; t < tower_count; ++t) {
    const std::string backbone = t == 0 ? "backbone" : "backbone_bg";
    const std::string fpn = t == 0 ? "fpn" : "fpn_bg";
    Tower tower;
    int cin = config_.image_channels;
    for (int k = 0; k < kNumLevels; ++k) {
      const int width = config_.backbone_widths[k];
      const std::string lvl = fmt::format(".l{}", k + kFirstLevel);
      tower.down[k] = make_block(backbone + lvl + ".down", cin, width, 2, config_.gn_groups, rng);
      tower.refine[k] =
          make_block(backbone + lvl + ".refine", width, width, 1, config_.gn_groups, rng);
      tower.lateral_w[k] = he_param(fpn + lvl + ".lateral.w", {config_.fpn_channels, width, 1, 1}, rng);
      tower.lateral_b[k] = zero_param(fpn + lvl + ".lateral.b", {config_.fpn_channels, 1, 1, 1});
      cin = width;
    }
    towers.push_back(std::move(tower));
  }

  rpn_w = he_param("rpn.conv.w", {config_.rpn_channels, config_.fpn_channels, 3, 3}, rng);
  rpn_b = zero_param("rpn.conv.b", {config_.rpn_channels, 1, 1, 1});
  objectness_w = he_param("rpn.objectness.w", {1, config_.rpn_channels, 1, 1}, rng);
  objectness_b = zero_param("rpn.objectness.b", {1, 1, 1, 1});

  for (int k = 0; k < kNumLevels; ++k) {
    const int level = k + kFirstLevel;
    light_heads[k] = make_block(fmt::format("light.l{}", level), config_.fpn_channels,
                                config_.semantic_channels, 1, config_.gn_groups, rng);
    if (config_.pam) {
      pam_states.push_back(AttentionState::create(
          fmt::format("pam.l{}", level), level, config_.rpn_channels,
          config_.pam_hidden_channels, config_.semantic_channels, config_.reweight_groups, rng));
    }
    if (config_.mam) {
      mam_states.push_back(AttentionState::create(
          fmt::format("mam.l{}", level), level, config_.mask_channels,
          config_.pam_hidden_channels, config_.semantic_channels, config_.reweight_groups, rng));
    }
  }
  semantic_w = he_param("semantic.w", {config_.num_semantic_classes, config_.semantic_channels, 1, 1}, rng);
  semantic_b = zero_param("semantic.b", {config_.num_semantic_classes, 1, 1, 1});

  fg_conv1 = make_block("fg.conv1", config_.fpn_channels, config_.fg_channels, 1,
                        config_.gn_groups, rng);
  fg_conv2 = make_block("fg.conv2", config_.fg_channels, config_.fg_channels, 1,
                        config_.gn_groups, rng);
  mask_w = he_param("fg.mask.w", {config_.mask_channels, config_.fg_channels, 1, 1}, rng);
  mask_b = zero_param("fg.mask.b", {config_.mask_channels, 1, 1, 1});
  class_w = he_param("fg.class.w", {config_.num_thing_classes, config_.fg_channels, 1, 1}, rng);
  class_b = zero_param("fg.class.b", {config_.num_thing_classes, 1, 1, 1});
}

Var conv_block(Graph& g, ConvBlock& block, Var x) {
  Var y = conv3x3(g, x, g.param(block.w), std::nullopt, block.stride);
  y = group_norm(g, y, block.groups, g.param(block.gamma), g.param(block.beta));
  return relu(g, y);
}

std::array<Var, kNumLevels> Model::run_tower(Graph& g, Tower& tower, Var image) {
  std::array<Var, kNumLevels> bottom_up;
  Var x = image;
  for (int k = 0; k < kNumLevels; ++k) {
    x = conv_block(g, tower.down[k], x);
    x = conv_block(g, tower.refine[k], x);
    bottom_up[k] = x;
  }
  std::array<Var, kNumLevels> pyramid;
  for (int k = kNumLevels - 1; k >= 0; --k) {
    Var lateral = pointwise_conv(g, bottom_up[k], g.param(tower.lateral_w[k]),
                                 g.param(tower.lateral_b[k]));
    if (k + 1 < kNumLevels) {
      const Shape s = g.shape(lateral);
      lateral = add(g, lateral, bilinear_resize(g, pyramid[k + 1], s.h, s.w));
    }
    pyramid[k] = lateral;
  }
  return pyramid;
}

ModelOutputs Model::forward(Graph& g, const Tensor& image, std::span<const RoI> rois) {
  const Shape is = image.shape();
  if (is.n != 1 || is.c != config_.image_channels) {
    throw std::invalid_argument(fmt::format("model expects a [1, {}, H, W] image, got {}",
                                            config_.image_channels, is.str()));
  }
  ModelOutputs out;
  Var img = g.constant(image);
  const std::array<Var, kNumLevels> fg_pyramid = run_tower(g, towers[0], img);
  const std::array<Var, kNumLevels> bg_pyramid =
      config_.e2e ? fg_pyramid : run_tower(g, towers[1], img);

  Var rw = g.param(rpn_w);
  Var rb = g.param(rpn_b);
  Var ow = g.param(objectness_w);
  Var ob = g.param(objectness_b);
  for (int k = 0; k < kNumLevels; ++k) {
    out.rpn_features[k] = relu(g, conv3x3(g, fg_pyramid[k], rw, rb));
    out.objectness[k] = pointwise_conv(g, out.rpn_features[k], ow, ob);
  }

  for (RoI roi : rois) {
    roi.level = assign_scale(roi, config_.scale);
    out.rois.push_back(roi);
  }
  if (!out.rois.empty()) {
    std::vector<PyramidLevel> levels;
    for (int k = 0; k < kNumLevels; ++k) {
      levels.push_back({fg_pyramid[k], 1.0 / level_stride(k + kFirstLevel)});
    }
    Var crops = roi_align(g, levels, out.rois, config_.mask_resolution, kFirstLevel);
    Var h = conv_block(g, fg_conv2, conv_block(g, fg_conv1, crops));
    out.mask_logits = pointwise_conv(g, h, g.param(mask_w), g.param(mask_b));
    out.class_logits =
        pointwise_conv(g, global_avg_pool(g, h), g.param(class_w), g.param(class_b));
  }

  std::optional<Var> mask_source;
  if (config_.mam && out.mask_logits) {
    mask_source = config_.scatter_logits ? *out.mask_logits : sigmoid(g, *out.mask_logits);
  }

  std::optional<Var> merged;
  Shape base_shape;
  for (int k = 0; k < kNumLevels; ++k) {
    const int level = k + kFirstLevel;
    Var s = conv_block(g, light_heads[k], bg_pyramid[k]);
    out.light_features[k] = s;
    if (config_.pam) {
      out.pam[k] = pam(g, out.rpn_features[k], s, bind(g, pam_states[k]), config_.reweight);
      s = out.pam[k]->output;
    }
    if (config_.mam) {
      const Shape ls = g.shape(s);
      const Shape canvas{1, config_.mask_channels, ls.h, ls.w};
      Var p_roi = mask_source ? roi_upsample(g, *mask_source, out.rois, canvas,
                                             1.0 / level_stride(level), level)
                              : g.constant(Tensor(canvas));
      out.mask_canvas[k] = p_roi;
      out.mam[k] = mam(g, s, p_roi, bind(g, mam_states[k]), config_.reweight);
      s = out.mam[k]->output;
    }
    if (!merged) {
      merged = s;
      base_shape = g.shape(s);
    } else {
      merged = add(g, *merged, bilinear_resize(g, s, base_shape.h, base_shape.w));
    }
  }
  Var logits = pointwise_conv(g, *merged, g.param(semantic_w), g.param(semantic_b));
  out.semantic_logits = bilinear_resize(g, logits, is.h, is.w);
  return out;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (Tower& t : towers) {
    for (int k = 0; k < kNumLevels; ++k) {
      append_block(out, t.down[k]);
      append_block(out, t.refine[k]);
    }
    for (int k = 0; k < kNumLevels; ++k) {
      out.push_back(&t.lateral_w[k]);
      out.push_back(&t.lateral_b[k]);
    }
  }
  for (Param* p : {&rpn_w, &rpn_b, &objectness_w, &objectness_b}) out.push_back(p);
  for (ConvBlock& b : light_heads) append_block(out, b);
  // Without reweighting only the two map convolutions take part.
  for (auto* states : {&pam_states, &mam_states}) {
    for (AttentionState& s : *states) {
      if (config_.reweight) {
        for (Param* p : s.params()) out.push_back(p);
      } else {
        out.push_back(&s.w1);
        out.push_back(&s.w2);
      }
    }
  }
  out.push_back(&semantic_w);
  out.push_back(&semantic_b);
  append_block(out, fg_conv1);
  append_block(out, fg_conv2);
  for (Param* p : {&mask_w, &mask_b, &class_w, &class_b}) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t total = 0;
  for (const Param* p : params()) total += p->size();
  return total;
}

std::map<std::string, std::size_t> Model::parameter_census() {
  std::map<std::string, std::size_t> census;
  for (const Param* p : params()) {
    census[p->name.substr(0, p->name.find('.'))] += p->size();
  }
  return census;
}

void Model::zero_parameters() {
  for (Param* p : params()) p->value.fill(0);
}

void Model::zero_attention_convolutions() {
  for (AttentionState& s : pam_states) s.zero_convolutions();
  for (AttentionState& s : mam_states) s.zero_convolutions();
}

}  // namespace aunet
