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

// Command-line front end: gradient checks, dataset synthesis, training,
// evaluation, ablations, standalone fusion and attention heatmaps.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "aunet/ablation.h"
#include "aunet/config.h"
#include "aunet/evaluate.h"
#include "aunet/fusion.h"
#include "aunet/grad_suite.h"
#include "aunet/heatmap.h"
#include "aunet/panoptic_io.h"
#include "aunet/scene.h"
#include "aunet/train.h"

namespace fs = std::filesystem;
using namespace aunet;

namespace {

// "--keep-fraction,--keep_fraction" for a key named keep_fraction.
std::string option_names(const std::string& key) {
  std::string dashed = key;
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  return dashed == key ? "--" + key : "--" + dashed + ",--" + key;
}

// Holds --config plus one --<key> option per config key.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    for (const ConfigKey& k : config_keys()) {
      app->add_option(option_names(k.name), overrides[k.name], k.help);
    }
  }

  RunConfig resolve(CLI::App* app) const {
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const ConfigKey& k : config_keys()) {
      if (app->count("--" + k.name) > 0) set_config_value(config, k.name, overrides.at(k.name));
    }
    return config;
  }
};

std::vector<Scene> scenes_for(const RunConfig& config, const std::string& data_dir, Split split,
                              const CategoryTable& categories) {
  if (!data_dir.empty()) {
    const fs::path dir = fs::path(data_dir) / (split == Split::kTrain ? "train" : "eval");
    return load_scenes(fs::exists(dir) ? dir : fs::path(data_dir), categories,
                       config.model.mask_resolution);
  }
  return make_split(config, split);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  return out;
}

int run_gradcheck(const std::string& suite, std::uint64_t seed,
                  std::optional<std::uint64_t> model_seed) {
  GradSuiteOptions options;
  options.seed = seed;
  if (model_seed) options.model_seed = *model_seed;
  std::vector<GradCheckReport> reports;
  if (suite == "ops" || suite == "all") reports = run_operator_grad_suite(options);
  if (suite == "model" || suite == "all") reports.push_back(run_model_grad_check(options));
  std::cout << format_grad_check_table(reports);
  double seconds = 0;
  bool ok = true;
  for (const auto& r : reports) {
    seconds += r.seconds;
    ok = ok && r.passed();
  }
  std::cout << fmt::format("{} checks, {:.2f} s, {}\n", reports.size(), seconds,
                           ok ? "all passed" : "FAILED");
  return ok ? 0 : 1;
}

int run_synth(const RunConfig& config, const std::string& out, const std::string& split) {
  const CategoryTable categories = synthetic_categories();
  for (const auto& [name, which] : {std::pair{"train", Split::kTrain}, std::pair{"eval", Split::kEval}}) {
    if (split != "all" && split != name) continue;
    const std::vector<Scene> scenes = make_split(config, which);
    save_scenes(fs::path(out) / name, scenes, categories);
    std::cout << fmt::format("wrote {} {} scenes to {}\n", scenes.size(), name,
                             (fs::path(out) / name).string());
  }
  return 0;
}

int run_train(const RunConfig& config, const std::string& data, const std::string& checkpoint,
              const std::string& trace_path, bool skip_gradcheck) {
  if (!skip_gradcheck) {
    const GradCheckReport check = run_model_grad_check();
    if (!check.passed()) {
      std::cerr << format_grad_check_table(std::span(&check, 1));
      std::cerr << "full-model gradient check failed; refusing to train\n";
      return 1;
    }
    spdlog::info("full-model gradient check passed (max rel err {:.2e})", check.max_rel_error());
  }
  const CategoryTable categories = synthetic_categories();
  const std::vector<Scene> train = scenes_for(config, data, Split::kTrain, categories);
  Model model(config.model);
  spdlog::info("training {} parameters on {} scenes for {} steps", model.parameter_count(),
               train.size(), config.train.steps);
  Trainer trainer(model, config.train, config.loss, categories);
  std::unique_ptr<std::ofstream> trace;
  if (!trace_path.empty()) {
    trace = std::make_unique<std::ofstream>(trace_path);
    *trace << "step,lr,total,rpn,rcnn,mask,seg\n";
  }
  trainer.run(train, [&](const StepRecord& r) {
    if (trace) {
      *trace << fmt::format("{},{},{},{},{},{},{}\n", r.step, r.lr, r.loss.total, r.loss.rpn,
                            r.loss.rcnn, r.loss.mask, r.loss.seg);
    }
  });
  save_checkpoint(checkpoint, model);
  std::cout << "checkpoint written to " << checkpoint << "\n";
  return 0;
}

int run_eval(const RunConfig& config, const std::string& data, const std::string& checkpoint,
             const std::string& heatmap_dir) {
  const CategoryTable categories = synthetic_categories();
  const std::vector<Scene> scenes = scenes_for(config, data, Split::kEval, categories);
  Model model(config.model);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, model);
  EvalOptions options;
  options.fusion = config.fusion;
  options.capture_heatmaps = !heatmap_dir.empty();
  const EvalReport report = evaluate(model, scenes, categories, options);
  std::cout << format_pq_table(report.pq, categories);
  std::cout << format_pq_keyvalue(report.pq);
  if (!heatmap_dir.empty()) {
    fs::create_directories(heatmap_dir);
    if (report.heatmaps.pam_level4) {
      write_png(fs::path(heatmap_dir) / "pam_m4.png", render_heatmap(*report.heatmaps.pam_level4, Palette::kJet, 8).image);
    }
    if (report.heatmaps.mam_level2) {
      write_png(fs::path(heatmap_dir) / "mam.png", render_heatmap(*report.heatmaps.mam_level2, Palette::kJet, 2).image);
    }
  }
  return 0;
}

int run_ablate(const RunConfig& config, const std::string& rows_text, const std::string& seeds_text,
               const std::string& data) {
  const CategoryTable categories = synthetic_categories();
  std::vector<std::string> rows;
  std::stringstream ss(rows_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) rows.push_back(item);
  }
  const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_text);
  if (rows.empty() || seeds.empty()) throw std::invalid_argument("ablate needs rows and seeds");
  const std::vector<Scene> train = scenes_for(config, data, Split::kTrain, categories);
  const std::vector<Scene> eval = scenes_for(config, data, Split::kEval, categories);
  const auto table = run_ablation(rows, seeds, config, train, eval, categories);
  std::cout << format_ablation_table(table);
  return 0;
}

CategoryTable categories_from_file(const std::string& path) {
  if (path.empty()) return synthetic_categories();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read categories " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.is_array()) doc = nlohmann::json{{"categories", doc}, {"images", nlohmann::json::array()},
                                           {"annotations", nlohmann::json::array()}};
  return CategoryTable(annotation_set_from_json(doc).categories);
}

int run_fuse(const std::string& instances_path, const std::string& semantic_path,
             const std::string& categories_path, const std::string& relations_path,
             const std::string& out_png, const std::string& out_json, const FusionParams& params) {
  CategoryTable categories = categories_from_file(categories_path);
  if (!relations_path.empty()) {
    std::ifstream in(relations_path);
    if (!in) throw std::runtime_error("cannot read relations " + relations_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    load_relations(buffer.str(), categories);
  }
  const RgbImage semantic_png = read_png(semantic_path);
  SemanticMap semantic{semantic_png.height, semantic_png.width, {}};
  for (int y = 0; y < semantic_png.height; ++y)
    for (int x = 0; x < semantic_png.width; ++x) semantic.category.push_back(semantic_png.pixel(y, x)[0]);

  std::ifstream in(instances_path);
  if (!in) throw std::runtime_error("cannot read instances " + instances_path);
  const nlohmann::json doc = nlohmann::json::parse(in);
  std::vector<InstancePrediction> instances;
  for (const auto& item : doc.at("instances")) {
    InstancePrediction inst;
    inst.height = semantic.height;
    inst.width = semantic.width;
    const auto& mask = item.at("segmentation");
    const auto size = mask.at("size").get<std::vector<int>>();
    if (size.size() != 2 || size[0] != semantic.height || size[1] != semantic.width) {
      throw std::invalid_argument("instance mask size does not match the semantic image");
    }
    inst.mask = decode_rle(mask.at("counts").get<std::vector<std::uint32_t>>(), size[0], size[1]);
    inst.category_id = item.at("category_id").get<int>();
    inst.score = item.at("score").get<double>();
    instances.push_back(std::move(inst));
  }
  const PanopticMap fused = fuse(std::move(instances), semantic, categories, params);
  EncodedPanoptic encoded = encode_panoptic(fused, categories);
  write_png(out_png, encoded.image);
  ImageAnnotation ann{0, "", fs::path(out_png).filename().string(), fused.width, fused.height,
                      encoded.records};
  PanopticAnnotationSet set{categories.all(), {ann}};
  save_annotation_set(out_json, set);
  std::cout << fmt::format("fused {} segments into {}\n", encoded.records.size(), out_png);
  return 0;
}

int run_viz(const RunConfig& config, const std::string& checkpoint, int scene_index,
            const std::string& out_dir, int upscale, const std::string& palette_name) {
  const CategoryTable categories = synthetic_categories();
  const std::vector<Scene> scenes = make_split(config, Split::kEval);
  if (scene_index < 0 || scene_index >= static_cast<int>(scenes.size())) {
    throw std::invalid_argument("scene index out of range");
  }
  Model model(config.model);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, model);
  AttentionHeatmaps maps;
  predict_scene(model, scenes[scene_index], categories, config.fusion, &maps);
  const Palette palette = palette_name == "gray" ? Palette::kGray : Palette::kJet;
  fs::create_directories(out_dir);
  const Shape is = scenes[scene_index].image.shape();
  RgbImage image(is.w, is.h);
  for (int y = 0; y < is.h; ++y)
    for (int x = 0; x < is.w; ++x)
      for (int c = 0; c < 3; ++c) {
        image.pixel(y, x)[c] = static_cast<std::uint8_t>(std::lround(scenes[scene_index].image(0, c, y, x) * 255));
      }
  write_png(fs::path(out_dir) / "image.png", image);
  int written = 0;
  if (maps.pam_level4) {
    const int scale = upscale * is.h / maps.pam_level4->shape().h;
    write_png(fs::path(out_dir) / "pam_m4.png", render_heatmap(*maps.pam_level4, palette, scale).image);
    ++written;
  }
  if (maps.mam_level2) {
    const int scale = upscale * is.h / maps.mam_level2->shape().h;
    write_png(fs::path(out_dir) / "mam.png", render_heatmap(*maps.mam_level2, palette, scale).image);
    ++written;
  }
  if (written == 0) {
    std::cerr << "model has neither PAM nor MAM enabled; no heatmaps written\n";
    return 1;
  }
  std::cout << fmt::format("wrote {} heatmaps to {}\n", written, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AUNet-mini: attention-guided panoptic segmentation at desk scale"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  std::string suite = "all";
  std::uint64_t grad_seed = 11;
  gradcheck->add_option("--suite", suite, "ops, model or all")
      ->check(CLI::IsMember({"ops", "model", "all"}));
  std::optional<std::uint64_t> grad_model_seed;
  gradcheck->add_option("--seed", grad_seed, "operator-suite seed");
  gradcheck->add_option("--model-seed", grad_model_seed, "full-model evaluation point");

  auto* synth = app.add_subcommand("synth", "write the synthetic dataset");
  ConfigFlags synth_flags;
  synth_flags.attach(synth);
  std::string synth_out;
  std::string synth_split = "all";
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--split", synth_split, "train, eval or all")
      ->check(CLI::IsMember({"train", "eval", "all"}));

  auto* train = app.add_subcommand("train", "train a model");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_data, train_checkpoint = "aunet.ckpt", train_trace;
  bool skip_gradcheck = false;
  train->add_option("--data", train_data, "dataset directory from `synth` (default: generate)");
  train->add_option("--checkpoint", train_checkpoint, "output checkpoint");
  train->add_option("--trace", train_trace, "CSV loss trace");
  train->add_flag("--skip-gradcheck", skip_gradcheck, "skip the pre-training gradient check");

  auto* eval = app.add_subcommand("eval", "panoptic quality on the evaluation split");
  ConfigFlags eval_flags;
  eval_flags.attach(eval);
  std::string eval_data, eval_checkpoint, eval_heatmaps;
  eval->add_option("--data", eval_data, "dataset directory from `synth` (default: generate)");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint (default: untrained model)");
  eval->add_option("--heatmaps", eval_heatmaps, "directory for attention heatmaps of scene 0");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate the ablation rows");
  ConfigFlags ablate_flags;
  ablate_flags.attach(ablate);
  std::string ablate_rows = fmt::format("{}", fmt::join(ablation_row_names(), ","));
  std::string ablate_seeds = "1,2,3";
  std::string ablate_data;
  ablate->add_option("--rows", ablate_rows, "comma-separated rows");
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds");
  ablate->add_option("--data", ablate_data, "dataset directory from `synth`");

  auto* fuse_cmd = app.add_subcommand("fuse", "fuse instance and semantic predictions");
  std::string instances_path, semantic_path, categories_path, relations_path, fuse_png, fuse_json;
  FusionParams fusion_params;
  fuse_cmd->add_option("--instances", instances_path, "instances JSON with RLE masks")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--semantic", semantic_path, "PNG whose red channel is the category id")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--categories", categories_path, "categories JSON (default: synthetic set)");
  fuse_cmd->add_option("--relations", relations_path, "never_overlapped_by relations file");
  fuse_cmd->add_option("--out-png", fuse_png, "panoptic id PNG")->required();
  fuse_cmd->add_option("--out-json", fuse_json, "segments JSON")->required();
  fuse_cmd->add_option(option_names("keep_fraction"), fusion_params.keep_fraction, "instance survival fraction");
  fuse_cmd->add_option(option_names("stuff_area_min"), fusion_params.stuff_area_min, "smallest stuff region");

  auto* viz = app.add_subcommand("viz-attention", "render background attention heatmaps");
  ConfigFlags viz_flags;
  viz_flags.attach(viz);
  std::string viz_checkpoint, viz_out = "heatmaps", viz_palette = "jet";
  int viz_scene = 0, viz_upscale = 4;
  viz->add_option("--checkpoint", viz_checkpoint, "checkpoint (default: untrained model)");
  viz->add_option("--scene", viz_scene, "evaluation scene index");
  viz->add_option("--out", viz_out, "output directory");
  viz->add_option("--upscale", viz_upscale, "output pixels per image pixel");
  viz->add_option("--palette", viz_palette, "jet or gray")->check(CLI::IsMember({"jet", "gray"}));

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (gradcheck->parsed()) return run_gradcheck(suite, grad_seed, grad_model_seed);
    if (synth->parsed()) return run_synth(synth_flags.resolve(synth), synth_out, synth_split);
    if (train->parsed()) {
      return run_train(train_flags.resolve(train), train_data, train_checkpoint, train_trace,
                       skip_gradcheck);
    }
    if (eval->parsed()) {
      return run_eval(eval_flags.resolve(eval), eval_data, eval_checkpoint, eval_heatmaps);
    }
    if (ablate->parsed()) {
      return run_ablate(ablate_flags.resolve(ablate), ablate_rows, ablate_seeds, ablate_data);
    }
    if (fuse_cmd->parsed()) {
      return run_fuse(instances_path, semantic_path, categories_path, relations_path, fuse_png,
                      fuse_json, fusion_params);
    }
    if (viz->parsed()) {
      return run_viz(viz_flags.resolve(viz), viz_checkpoint, viz_scene, viz_out, viz_upscale,
                     viz_palette);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
