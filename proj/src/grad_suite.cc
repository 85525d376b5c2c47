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

#include "aunet/grad_suite.h"

#include <random>

#include "aunet/attention.h"
#include "aunet/loss.h"
#include "aunet/ops.h"
#include "aunet/roi_sampling.h"

namespace aunet {

namespace {

Param random_param(const std::string& name, Shape shape, std::mt19937_64& rng, Real lo = -1,
                   Real hi = 1) {
  std::uniform_real_distribution<Real> dist(lo, hi);
  Tensor t(shape);
  for (Real& v : t.data()) v = dist(rng);
  return Param(name, std::move(t));
}

RoI make_roi(Real x1, Real y1, Real x2, Real y2, int level = -1) {
  RoI r;
  r.box = {x1, y1, x2, y2};
  r.level = level;
  return r;
}

}  // namespace

std::vector<GradCheckReport> run_operator_grad_suite(const GradSuiteOptions& options) {
  std::mt19937_64 rng(options.seed);
  GradCheckOptions gc;
  gc.tolerance = options.operator_tolerance;
  gc.seed = options.seed;
  std::vector<GradCheckReport> reports;

  {
    Param x = random_param("x", {2, 3, 4, 5}, rng);
    Param w = random_param("w", {4, 3, 1, 1}, rng);
    Param b = random_param("bias", {4, 1, 1, 1}, rng);
    reports.push_back(grad_check("pointwise_conv", [&](Graph& g) {
      return pointwise_conv(g, g.param(x), g.param(w), g.param(b));
    }, std::vector<Param*>{&x, &w, &b}, gc));
  }
  for (int stride : {1, 2}) {
    Param x = random_param("x", {2, 2, 5, 6}, rng);
    Param w = random_param("w", {3, 2, 3, 3}, rng);
    Param b = random_param("bias", {3, 1, 1, 1}, rng);
    reports.push_back(grad_check(stride == 1 ? "conv3x3/stride1" : "conv3x3/stride2",
                                 [&](Graph& g) {
                                   return conv3x3(g, g.param(x), g.param(w), g.param(b), stride);
                                 },
                                 std::vector<Param*>{&x, &w, &b}, gc));
  }
  {
    Param x = random_param("x", {2, 4, 3, 3}, rng);
    Param gamma = random_param("gamma", {4, 1, 1, 1}, rng, 0.5, 1.5);
    Param beta = random_param("beta", {4, 1, 1, 1}, rng);
    reports.push_back(grad_check("group_norm", [&](Graph& g) {
      return group_norm(g, g.param(x), 2, g.param(gamma), g.param(beta));
    }, std::vector<Param*>{&x, &gamma, &beta}, gc));
  }
  {
    Param x = random_param("x", {2, 3, 3, 4}, rng);
    reports.push_back(grad_check("global_avg_pool", [&](Graph& g) {
      return global_avg_pool(g, g.param(x));
    }, std::vector<Param*>{&x}, gc));
  }
  for (Activation kind : {Activation::kRelu, Activation::kSigmoid}) {
    Param x = random_param("x", {1, 2, 4, 4}, rng, -3, 3);
    reports.push_back(grad_check(kind == Activation::kRelu ? "activation/relu" : "activation/sigmoid",
                                 [&](Graph& g) { return activation(g, g.param(x), kind); },
                                 std::vector<Param*>{&x}, gc));
  }
  const std::vector<std::pair<std::string, Shape>> broadcasts{
      {"same", {2, 3, 3, 4}}, {"spatial", {2, 1, 3, 4}}, {"channel", {2, 3, 1, 1}}};
  for (const auto& [label, b_shape] : broadcasts) {
    for (Elementwise kind : {Elementwise::kMul, Elementwise::kAdd}) {
      Param a = random_param("a", {2, 3, 3, 4}, rng);
      Param b = random_param("b", b_shape, rng);
      const std::string name =
          std::string(kind == Elementwise::kMul ? "mul/" : "add/") + label;
      reports.push_back(grad_check(name, [&](Graph& g) {
        return elementwise(g, g.param(a), g.param(b), kind);
      }, std::vector<Param*>{&a, &b}, gc));
    }
  }
  for (const auto& [oh, ow] : std::vector<std::pair<int, int>>{{7, 9}, {2, 3}}) {
    Param x = random_param("x", {1, 2, 4, 5}, rng);
    reports.push_back(grad_check(oh > 4 ? "bilinear_resize/up" : "bilinear_resize/down",
                                 [&](Graph& g) { return bilinear_resize(g, g.param(x), oh, ow); },
                                 std::vector<Param*>{&x}, gc));
  }
  {
    Param features = random_param("features", {1, 3, 12, 12}, rng);
    const std::vector<RoI> rois{make_roi(1.3, 2.1, 8.7, 9.4), make_roi(-0.6, 5.2, 4.1, 12.5),
                                make_roi(6.2, 0.4, 11.9, 3.3)};
    reports.push_back(grad_check("roi_align", [&](Graph& g) {
      const std::vector<PyramidLevel> levels{{g.param(features), 1.0}};
      return roi_align(g, levels, rois, 4);
    }, std::vector<Param*>{&features}, gc));
  }
  for (SampleShare share : {SampleShare::kFull, SampleShare::kQuarter}) {
    Param masks = random_param("masks", {2, 1, 4, 4}, rng);
    const std::vector<RoI> rois{make_roi(1.3, 2.1, 14.7, 13.4), make_roi(4.2, 0.5, 9.9, 7.3)};
    RoiUpsampleOptions up;
    up.share = share;
    reports.push_back(grad_check(share == SampleShare::kFull ? "roi_upsample/full" : "roi_upsample/quarter",
                                 [&](Graph& g) {
                                   return roi_upsample(g, g.param(masks), rois, {1, 1, 16, 16},
                                                       1.0, -1, up);
                                 },
                                 std::vector<Param*>{&masks}, gc));
  }

  // Attention chains on a 2-sample batch.
  std::mt19937_64 init(options.seed + 1);
  for (bool reweight : {false, true}) {
    AttentionState state = AttentionState::create("pam", 3, 3, 5, 4, 2, init);
    Param p = random_param("P", {2, 3, 3, 3}, rng);
    Param s = random_param("S", {2, 4, 3, 3}, rng);
    std::vector<Param*> inputs{&p, &s};
    for (Param* q : state.params()) inputs.push_back(q);
    reports.push_back(grad_check(reweight ? "pam/reweighted" : "pam/attended", [&](Graph& g) {
      return pam(g, g.param(p), g.param(s), bind(g, state), reweight).output;
    }, inputs, gc));
  }
  {
    AttentionState state = AttentionState::create("mam", 2, 1, 5, 4, 2, init);
    Param s = random_param("S_pam", {1, 4, 10, 10}, rng);
    Param logits = random_param("mask_logits", {2, 1, 4, 4}, rng, -2, 2);
    const std::vector<RoI> rois{make_roi(0.7, 1.2, 6.9, 8.1), make_roi(4.3, 3.6, 9.8, 9.9)};
    std::vector<Param*> inputs{&s, &logits};
    for (Param* q : state.params()) inputs.push_back(q);
    reports.push_back(grad_check("mam/chain", [&](Graph& g) {
      Var canvas = roi_upsample(g, sigmoid(g, g.param(logits)), rois, {1, 1, 10, 10}, 1.0);
      return mam(g, g.param(s), canvas, bind(g, state), true).output;
    }, inputs, gc));
  }
  return reports;
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.backbone_widths = {4, 4, 4, 4};
  c.fpn_channels = 4;
  c.rpn_channels = 4;
  c.pam_hidden_channels = 4;
  c.semantic_channels = 4;
  c.fg_channels = 4;
  c.gn_groups = 2;
  c.reweight_groups = 2;
  c.scale.canonical_size = 8;
  return c;
}

GradCheckReport run_model_grad_check(const GradSuiteOptions& options) {
  ModelConfig config = tiny_model_config();
  config.init_seed = options.model_seed;
  Model model(config);
  std::mt19937_64 rng(options.model_seed + 2);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  // Zero biases put zero-padded RoI regions exactly on ReLU kinks.
  std::normal_distribution<Real> jitter(0.0, 0.1);
  for (Param* p : model.params()) {
    for (Real& v : p->value.data()) v += jitter(rng);
  }

  Tensor image(Shape{1, 3, 8, 8});
  for (Real& v : image.data()) v = unit(rng);
  RoI a;
  a.box = {0.6, 1.2, 3.9, 4.4};  // level 2
  a.class_id = 1;
  RoI b;
  b.box = {2.3, 1.7, 8.0, 7.6};  // level 3
  b.class_id = 3;

  TrainingTarget target;
  target.rois = {a, b};
  int side = 8;
  for (int k = 0; k < kNumLevels; ++k) {
    side = (side - 1) / 2 + 1;
    target.objectness[k] = Tensor(Shape{1, 1, side, side});
    for (Real& v : target.objectness[k].data()) v = unit(rng) < 0.5 ? 1.0 : 0.0;
  }
  target.thing_labels = {0, 2};
  const int m = config.mask_resolution;
  target.masks = Tensor(Shape{2, 1, m, m});
  for (Real& v : target.masks.data()) v = unit(rng) < 0.5 ? 1.0 : 0.0;
  std::uniform_int_distribution<int> label(-1, config.num_semantic_classes - 1);
  for (int p = 0; p < 64; ++p) target.semantic_labels.push_back(label(rng));

  GradCheckOptions gc;
  gc.tolerance = options.model_tolerance;
  gc.seed = options.model_seed;
  return grad_check("model/joint_loss", [&](Graph& g) {
    const ModelOutputs out = model.forward(g, image, target.rois);
    return joint_loss(g, out, target, LossWeights::coco()).total;
  }, model.params(), gc);
}

}  // namespace aunet
