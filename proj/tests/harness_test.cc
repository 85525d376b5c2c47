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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "aunet/ablation.h"
#include "aunet/config.h"
#include "aunet/evaluate.h"
#include "aunet/fusion.h"
#include "aunet/grad_suite.h"
#include "aunet/loss.h"
#include "aunet/model.h"
#include "aunet/ops.h"
#include "aunet/train.h"

namespace aunet {
namespace {

namespace fs = std::filesystem;

Scene default_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  return generate_scene(spec);
}

ModelConfig small_config() {
  ModelConfig c;
  c.backbone_widths = {8, 8, 16, 16};
  c.fpn_channels = 16;
  c.rpn_channels = 16;
  c.pam_hidden_channels = 16;
  c.semantic_channels = 16;
  c.fg_channels = 16;
  return c;
}

TEST(LossWeights, ProfileArithmetic) {
  EXPECT_DOUBLE_EQ(combine_losses(LossWeights::coco(), 1, 1, 1, 1), 3.3);
  EXPECT_DOUBLE_EQ(combine_losses(LossWeights::cityscapes(), 1, 1, 1, 1), 3.75);
  EXPECT_THROW((LossWeights{1, -1, 1, 1}.validate()), std::invalid_argument);
}

TEST(LossOps, ConfidentCorrectPredictionsCostNothing) {
  Graph g;
  const Tensor targets({1, 1, 2, 2}, {1, 0, 0, 1});
  const Var logits = g.constant(Tensor({1, 1, 2, 2}, {60, -60, -60, 60}));
  EXPECT_LT(g.value(bce_with_logits(g, logits, targets))[0], 1e-20);
  const Var scores = g.constant(Tensor({2, 3, 1, 1}, {60, 0, 0, 0, 0, 60}));
  const std::vector<int> labels{0, 2};
  EXPECT_LT(g.value(softmax_cross_entropy(g, scores, labels))[0], 1e-20);
  const std::vector<int> ignored{-1, -1};
  EXPECT_EQ(g.value(softmax_cross_entropy(g, scores, ignored))[0], 0.0);
}

TEST(Target, ObjectnessAndLabels) {
  const CategoryTable cats = synthetic_categories();
  const Scene s = default_scene(3);
  const ModelConfig config;
  const TrainingTarget t = make_target(s, cats, config);
  EXPECT_EQ(t.objectness[0].shape(), (Shape{1, 1, 32, 32}));
  EXPECT_EQ(t.objectness[3].shape(), (Shape{1, 1, 4, 4}));
  for (int k = 0; k < kNumLevels; ++k) {
    const int stride = level_stride(k + kFirstLevel);
    const Tensor& obj = t.objectness[k];
    for (int y = 0; y < obj.shape().h; ++y)
      for (int x = 0; x < obj.shape().w; ++x) {
        bool inside = false;
        for (const RoI& r : s.rois) {
          const double cx = (x + 0.5) * stride, cy = (y + 0.5) * stride;
          inside |= cx >= r.box.x1 && cx <= r.box.x2 && cy >= r.box.y1 && cy <= r.box.y2;
        }
        EXPECT_EQ(obj(0, 0, y, x), inside ? 1.0 : 0.0);
      }
  }
  ASSERT_EQ(t.thing_labels.size(), s.rois.size());
  for (std::size_t i = 0; i < s.rois.size(); ++i) {
    EXPECT_EQ(cats.thing_ids()[t.thing_labels[i]], s.rois[i].class_id);
  }
  EXPECT_EQ(t.masks.shape(), (Shape{static_cast<int>(s.rois.size()), 1, 14, 14}));
  EXPECT_EQ(t.semantic_labels.size(), s.panoptic.size());
}

TEST(Model, ZeroParametersGiveUniformSoftmax) {
  Model model(small_config());
  model.zero_parameters();
  const Scene s = default_scene(4);
  Graph g;
  const ModelOutputs out = model.forward(g, s.image, s.rois);
  const Tensor& logits = g.value(out.semantic_logits);
  EXPECT_EQ(logits.shape(), (Shape{1, 6, 64, 64}));
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 1; c < 6; ++c) ASSERT_EQ(logits(0, c, y, x), logits(0, 0, y, x));
}

TEST(Model, ColdStartAttentionIsThreeQuartersAtEveryLevel) {
  Model model(small_config());
  model.zero_attention_convolutions();
  const Scene s = default_scene(5);
  Graph g;
  const ModelOutputs out = model.forward(g, s.image, s.rois);
  for (int k = 0; k < kNumLevels; ++k) {
    const Tensor& light = g.value(out.light_features[k]);
    const Tensor& pam_out = g.value(out.pam[k]->output);
    const Tensor& mam_out = g.value(out.mam[k]->output);
    for (std::size_t i = 0; i < light.size(); ++i) {
      ASSERT_EQ(pam_out[i], 0.75 * light[i]);
      ASSERT_EQ(mam_out[i], 0.75 * pam_out[i]);
    }
  }
}

TEST(Model, FlagsOffMatchesHandWiredPlainNetwork) {
  ModelConfig config = config_for_row("e2e", small_config());
  Model model(config);
  const Scene s = default_scene(6);
  Graph g;
  const ModelOutputs out = model.forward(g, s.image, s.rois);

  Graph h;
  std::array<Var, kNumLevels> bottom_up;
  Var x = h.constant(s.image);
  Tower& t = model.towers[0];
  for (int k = 0; k < kNumLevels; ++k) {
    x = conv_block(h, t.refine[k], conv_block(h, t.down[k], x));
    bottom_up[k] = x;
  }
  std::array<Var, kNumLevels> pyramid;
  for (int k = kNumLevels - 1; k >= 0; --k) {
    pyramid[k] = pointwise_conv(h, bottom_up[k], h.param(t.lateral_w[k]), h.param(t.lateral_b[k]));
    if (k + 1 < kNumLevels) {
      const Shape sh = h.shape(pyramid[k]);
      pyramid[k] = add(h, pyramid[k], bilinear_resize(h, pyramid[k + 1], sh.h, sh.w));
    }
  }
  Var merged = conv_block(h, model.light_heads[0], pyramid[0]);
  const Shape base = h.shape(merged);
  for (int k = 1; k < kNumLevels; ++k) {
    merged = add(h, merged,
                 bilinear_resize(h, conv_block(h, model.light_heads[k], pyramid[k]), base.h, base.w));
  }
  Var logits = pointwise_conv(h, merged, h.param(model.semantic_w), h.param(model.semantic_b));
  logits = bilinear_resize(h, logits, 64, 64);
  EXPECT_TRUE(bitwise_equal(g.value(out.semantic_logits), h.value(logits)));
  for (int k = 0; k < kNumLevels; ++k) {
    EXPECT_FALSE(out.pam[k].has_value());
    EXPECT_FALSE(out.mam[k].has_value());
  }
}

TEST(Model, CensusFollowsTheFlags) {
  const ModelConfig base = small_config();
  auto census = [&](const std::string& row) { return Model(config_for_row(row, base)).parameter_census(); };
  const auto e2e = census("e2e");
  const auto sep = census("sep");
  EXPECT_EQ(e2e.count("backbone_bg"), 0u);
  EXPECT_EQ(sep.at("backbone_bg"), sep.at("backbone"));
  EXPECT_EQ(sep.at("fpn_bg"), sep.at("fpn"));
  EXPECT_EQ(e2e.count("pam"), 0u);
  EXPECT_EQ(e2e.count("mam"), 0u);

  const auto pam = census("PAM");
  const auto pam_r = census("PAM_r");
  const std::size_t cs = base.semantic_channels, cr = base.rpn_channels;
  const std::size_t hid = base.pam_hidden_channels;
  EXPECT_EQ(pam.at("pam"), kNumLevels * (hid * cr + hid));
  EXPECT_EQ(pam_r.at("pam"), kNumLevels * (hid * cr + hid + cs * cs + 2 * cs));
  EXPECT_EQ(pam.count("mam"), 0u);
  const auto aunet = census("AUNet");
  EXPECT_EQ(aunet.at("mam"), kNumLevels * (hid * base.mask_channels + hid + cs * cs + 2 * cs));
  EXPECT_THROW(config_for_row("nonsense", base), std::invalid_argument);
  EXPECT_EQ(ablation_row_names().size(), 7u);
}

TEST(Model, RejectsInconsistentConfig) {
  ModelConfig c = small_config();
  c.semantic_channels = 10;
  EXPECT_THROW(Model{c}, std::invalid_argument);
  c = small_config();
  c.mask_resolution = 0;
  EXPECT_THROW(Model{c}, std::invalid_argument);
}

TEST(Model, FullModelGradientCheck) {
  const GradCheckReport r = run_model_grad_check();
  EXPECT_TRUE(r.passed()) << format_grad_check_table(std::span(&r, 1));
  EXPECT_LE(r.max_rel_error(), 1e-4);
}

TEST(Train, LearningRateSchedule) {
  TrainConfig t;
  EXPECT_DOUBLE_EQ(t.lr_at(0), 0.01);
  EXPECT_DOUBLE_EQ(t.lr_at(1399), 0.01);
  EXPECT_DOUBLE_EQ(t.lr_at(1400), 0.001);
  EXPECT_NEAR(t.lr_at(1999), 0.0001, 1e-18);
  t.milestones = {5, 3};
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Train, ZeroLearningRateLeavesParametersBitwise) {
  const CategoryTable cats = synthetic_categories();
  Model model(small_config());
  std::vector<Tensor> before;
  for (Param* p : model.params()) before.push_back(p->value);
  TrainConfig tc;
  tc.steps = 3;
  tc.base_lr = 0;
  Trainer trainer(model, tc, LossWeights::coco(), cats);
  const std::vector<Scene> scenes{default_scene(7), default_scene(8)};
  trainer.run(scenes);
  std::size_t i = 0;
  for (Param* p : model.params()) ASSERT_TRUE(bitwise_equal(p->value, before[i++])) << p->name;
}

TEST(Train, SameSeedGivesIdenticalTraces) {
  const CategoryTable cats = synthetic_categories();
  const std::vector<Scene> scenes{default_scene(9), default_scene(10), default_scene(11)};
  TrainConfig tc;
  tc.steps = 6;
  tc.batch_size = 2;
  auto trace = [&] {
    Model model(small_config());
    Trainer trainer(model, tc, LossWeights::coco(), cats);
    std::vector<double> totals;
    for (const StepRecord& r : trainer.run(scenes)) totals.push_back(r.loss.total);
    return totals;
  };
  const auto a = trace();
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(a, trace());
}

TEST(Train, SingleSceneOverfits) {
  const CategoryTable cats = synthetic_categories();
  Model model(ModelConfig{});
  TrainConfig tc;
  tc.steps = 200;
  tc.milestones = {};
  Trainer trainer(model, tc, LossWeights::coco(), cats);
  const std::vector<Scene> scenes{default_scene(12)};
  const double initial = evaluate_loss(model, scenes[0], cats, LossWeights::coco()).total;
  trainer.run(scenes);
  const double final_loss = evaluate_loss(model, scenes[0], cats, LossWeights::coco()).total;
  EXPECT_LT(final_loss, 0.1 * initial) << "initial " << initial << " final " << final_loss;
}

TEST(Train, NonFiniteLossNamesTheComponent) {
  const CategoryTable cats = synthetic_categories();
  Model model(small_config());
  model.objectness_b.value.fill(NAN);
  Trainer trainer(model, TrainConfig{}, LossWeights::coco(), cats);
  const Scene s = default_scene(13);
  const Scene* batch[] = {&s};
  try {
    trainer.step(batch);
    FAIL() << "expected a non-finite loss error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("rpn"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, RoundTripAndShapeCheck) {
  const fs::path path = fs::temp_directory_path() / "aunet_harness.ckpt";
  ModelConfig c = small_config();
  Model a(c);
  save_checkpoint(path, a);
  c.init_seed = 99;
  Model b(c);
  load_checkpoint(path, b);
  auto pa = a.params(), pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(bitwise_equal(pa[i]->value, pb[i]->value));
  Model other(config_for_row("sep", small_config()));
  EXPECT_THROW(load_checkpoint(path, other), std::runtime_error);
  ModelConfig wide = small_config();
  wide.fg_channels = 32;
  Model wider(wide);
  EXPECT_THROW(load_checkpoint(path, wider), std::runtime_error);
}

TEST(Config, ParseFormatRoundTrip) {
  const RunConfig c = parse_config(
      "# comment\n"
      "steps = 50\n"
      "pam = false   # trailing\n"
      "backbone_widths = 4,8,8,16\n"
      "loss_profile = cityscapes\n"
      "keep_fraction = 0.3\n"
      "\n");
  EXPECT_EQ(c.train.steps, 50);
  EXPECT_FALSE(c.model.pam);
  EXPECT_EQ(c.model.backbone_widths, (std::array<int, 4>{4, 8, 8, 16}));
  EXPECT_DOUBLE_EQ(c.loss.rcnn, 0.75);
  EXPECT_DOUBLE_EQ(c.fusion.keep_fraction, 0.3);
  const RunConfig again = parse_config(format_config(c));
  EXPECT_EQ(format_config(again), format_config(c));
  for (const ConfigKey& key : config_keys()) EXPECT_EQ(key.get(again), key.get(c)) << key.name;
}

TEST(Config, RejectsBadInput) {
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "no_such_key", "1"), std::invalid_argument);
  EXPECT_THROW(set_config_value(c, "steps", "many"), std::invalid_argument);
  EXPECT_THROW(set_config_value(c, "pam", "perhaps"), std::invalid_argument);
  EXPECT_THROW(parse_config("steps 5\n"), std::invalid_argument);
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const fs::path dir = AUNET_CONFIG_DIR;
  EXPECT_EQ(format_config(load_config(dir / "default.cfg")), format_config(RunConfig{}));
  EXPECT_NO_THROW(load_config(dir / "quick.cfg").model.validate());
  std::ifstream in(dir / "relations.txt");
  std::stringstream text;
  text << in.rdbuf();
  CategoryTable cats({{1, "person", true, {}}, {2, "tie", true, {}}});
  load_relations(text.str(), cats);
  EXPECT_TRUE(cats.protected_from(2, 1));
  EXPECT_FALSE(cats.protected_from(1, 2));
}

TEST(Config, SplitsAreDisjointAndSized) {
  RunConfig c;
  c.data.train_scenes = 3;
  c.data.eval_scenes = 2;
  const auto train = make_split(c, Split::kTrain);
  const auto eval = make_split(c, Split::kEval);
  ASSERT_EQ(train.size(), 3u);
  ASSERT_EQ(eval.size(), 2u);
  EXPECT_FALSE(bitwise_equal(train[0].image, eval[0].image));
  EXPECT_TRUE(bitwise_equal(train[1].image, default_scene(1001).image));
}

TEST(Evaluate, PasteFillsTheBoxForConfidentMasks) {
  Tensor masks({1, 1, 4, 4}, 5.0);
  Tensor classes({1, 3, 1, 1}, {0.0, 2.0, 0.0});
  RoI roi;
  roi.box = {2, 3, 6, 8};
  const auto out = paste_instances(masks, classes, std::span(&roi, 1), 10, 10, 0.5, {1, 2, 3});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].category_id, 2);
  EXPECT_NEAR(out[0].score, std::exp(2.0) / (2 + std::exp(2.0)), 1e-12);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      const bool inside = x >= 2 && x < 6 && y >= 3 && y < 8;
      EXPECT_EQ(out[0].mask[y * 10 + x], inside ? 1 : 0) << y << "," << x;
    }
}

TEST(Evaluate, SemanticArgmaxUsesTableOrder) {
  const CategoryTable cats = synthetic_categories();
  Tensor logits({1, 6, 1, 2});
  logits(0, 4, 0, 0) = 1;
  logits(0, 1, 0, 1) = 1;
  const SemanticMap m = semantic_argmax(logits, cats);
  EXPECT_EQ(m.category, (std::vector<int>{cats.all()[4].id, cats.all()[1].id}));
}

TEST(Ablation, RowsCarryPerSeedScoresAndStatistics) {
  const CategoryTable cats = synthetic_categories();
  RunConfig base;
  base.model = tiny_model_config();
  base.train.steps = 2;
  std::vector<Scene> train{default_scene(20), default_scene(21)};
  std::vector<Scene> eval{default_scene(30)};
  const auto rows = run_ablation({"sep", "AUNet"}, {1, 2}, base, train, eval, cats);
  ASSERT_EQ(rows.size(), 2u);
  for (const AblationRow& r : rows) {
    ASSERT_EQ(r.pq.size(), 2u);
    EXPECT_NEAR(r.mean, (r.pq[0] + r.pq[1]) / 2, 1e-15);
    EXPECT_NEAR(r.stddev, std::abs(r.pq[0] - r.pq[1]) / std::sqrt(2.0), 1e-12);
  }
  EXPECT_GT(rows[0].parameters, Model(config_for_row("e2e", base.model)).parameter_count());
  const std::string table = format_ablation_table(rows);
  EXPECT_NE(table.find("sep"), std::string::npos);
  EXPECT_NE(table.find("AUNet"), std::string::npos);
}

}  // namespace
}  // namespace aunet
