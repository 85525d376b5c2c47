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

#include "aunet/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace aunet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument(fmt::format("config key '{}': cannot parse '{}'", key, text));
  }
  return value;
}

// libstdc++ 11 has no floating-point from_chars fallback worth relying on.
template <>
double parse_number<double>(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw std::invalid_argument(fmt::format("config key '{}': cannot parse '{}'", key, text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument(fmt::format("config key '{}': '{}' is not a boolean", key, text));
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<int>(key, item));
  }
  return out;
}

template <typename T>
ConfigKey number_key(std::string name, std::string help, std::function<T&(RunConfig&)> field) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.set = [name, field](RunConfig& c, const std::string& v) {
    field(c) = parse_number<T>(name, v);
  };
  k.get = [field](const RunConfig& c) {
    return fmt::format("{}", field(const_cast<RunConfig&>(c)));
  };
  return k;
}

ConfigKey bool_key(std::string name, std::string help, std::function<bool&(RunConfig&)> field) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.set = [name, field](RunConfig& c, const std::string& v) { field(c) = parse_bool(name, v); };
  k.get = [field](const RunConfig& c) {
    return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false");
  };
  return k;
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  // Model.
  keys.push_back({"backbone_widths", "channel widths of pyramid levels 2-5",
                  [](RunConfig& c, const std::string& v) {
                    const std::vector<int> w = parse_int_list("backbone_widths", v);
                    if (w.size() != kNumLevels) {
                      throw std::invalid_argument("backbone_widths needs 4 values");
                    }
                    std::copy(w.begin(), w.end(), c.model.backbone_widths.begin());
                  },
                  [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.model.backbone_widths, ",")); }});
  keys.push_back(number_key<int>("fpn_channels", "pyramid feature width",
                                 [](RunConfig& c) -> int& { return c.model.fpn_channels; }));
  keys.push_back(number_key<int>("rpn_channels", "C_r, width of the RPN features P_i",
                                 [](RunConfig& c) -> int& { return c.model.rpn_channels; }));
  keys.push_back(number_key<int>("pam_hidden_channels", "C'_r, hidden width of the attention head",
                                 [](RunConfig& c) -> int& { return c.model.pam_hidden_channels; }));
  keys.push_back(number_key<int>("semantic_channels", "C_s, width of the background features",
                                 [](RunConfig& c) -> int& { return c.model.semantic_channels; }));
  keys.push_back(number_key<int>("mask_channels", "C_m, channels of the upsampled mask canvas",
                                 [](RunConfig& c) -> int& { return c.model.mask_channels; }));
  keys.push_back(number_key<int>("mask_resolution", "m, RoI mask size (14 or 28)",
                                 [](RunConfig& c) -> int& { return c.model.mask_resolution; }));
  keys.push_back(number_key<int>("fg_channels", "width of the foreground mask head",
                                 [](RunConfig& c) -> int& { return c.model.fg_channels; }));
  keys.push_back(number_key<int>("gn_groups", "group-norm groups in conv blocks",
                                 [](RunConfig& c) -> int& { return c.model.gn_groups; }));
  keys.push_back(number_key<int>("reweight_groups", "group-norm groups of the channel reweight",
                                 [](RunConfig& c) -> int& { return c.model.reweight_groups; }));
  keys.push_back(bool_key("e2e", "share one backbone between branches",
                          [](RunConfig& c) -> bool& { return c.model.e2e; }));
  keys.push_back(bool_key("pam", "enable the proposal attention module",
                          [](RunConfig& c) -> bool& { return c.model.pam; }));
  keys.push_back(bool_key("mam", "enable the mask attention module",
                          [](RunConfig& c) -> bool& { return c.model.mam; }));
  keys.push_back(bool_key("reweight", "enable background channel reweighting",
                          [](RunConfig& c) -> bool& { return c.model.reweight; }));
  keys.push_back(bool_key("scatter_logits", "scatter mask logits instead of probabilities",
                          [](RunConfig& c) -> bool& { return c.model.scatter_logits; }));
  keys.push_back(number_key<double>("canonical_size", "box size assigned to the canonical level",
                                    [](RunConfig& c) -> double& { return c.model.scale.canonical_size; }));
  keys.push_back(number_key<int>("canonical_level", "pyramid level of a canonical-size box",
                                 [](RunConfig& c) -> int& { return c.model.scale.canonical_level; }));
  keys.push_back(number_key<std::uint64_t>("init_seed", "parameter initialization seed",
                                           [](RunConfig& c) -> std::uint64_t& { return c.model.init_seed; }));
  // Loss.
  keys.push_back({"loss_profile", "coco or cityscapes lambda preset",
                  [](RunConfig& c, const std::string& v) {
                    const std::string t = trim(v);
                    if (t == "coco") {
                      c.loss = LossWeights::coco();
                    } else if (t == "cityscapes") {
                      c.loss = LossWeights::cityscapes();
                    } else {
                      throw std::invalid_argument("loss_profile must be coco or cityscapes");
                    }
                  },
                  [](const RunConfig&) { return std::string(); }});
  keys.push_back(number_key<double>("lambda_rpn", "lambda_1",
                                    [](RunConfig& c) -> double& { return c.loss.rpn; }));
  keys.push_back(number_key<double>("lambda_rcnn", "lambda_2",
                                    [](RunConfig& c) -> double& { return c.loss.rcnn; }));
  keys.push_back(number_key<double>("lambda_mask", "lambda_3",
                                    [](RunConfig& c) -> double& { return c.loss.mask; }));
  keys.push_back(number_key<double>("lambda_seg", "lambda_4",
                                    [](RunConfig& c) -> double& { return c.loss.seg; }));
  // Training.
  keys.push_back(number_key<int>("steps", "optimizer steps",
                                 [](RunConfig& c) -> int& { return c.train.steps; }));
  keys.push_back(number_key<double>("lr", "base learning rate",
                                    [](RunConfig& c) -> double& { return c.train.base_lr; }));
  keys.push_back({"milestones", "steps at which the learning rate decays",
                  [](RunConfig& c, const std::string& v) { c.train.milestones = parse_int_list("milestones", v); },
                  [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.train.milestones, ",")); }});
  keys.push_back(number_key<double>("decay_factor", "learning-rate multiplier per milestone",
                                    [](RunConfig& c) -> double& { return c.train.decay_factor; }));
  keys.push_back(number_key<double>("momentum", "SGD momentum",
                                    [](RunConfig& c) -> double& { return c.train.momentum; }));
  keys.push_back(number_key<double>("weight_decay", "L2 weight decay",
                                    [](RunConfig& c) -> double& { return c.train.weight_decay; }));
  keys.push_back(number_key<int>("batch_size", "scenes per step",
                                 [](RunConfig& c) -> int& { return c.train.batch_size; }));
  keys.push_back(number_key<std::uint64_t>("seed", "data-order seed",
                                           [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
  keys.push_back(number_key<int>("log_every", "steps between log lines (0 = silent)",
                                 [](RunConfig& c) -> int& { return c.train.log_every; }));
  // Data.
  keys.push_back(number_key<int>("train_scenes", "training split size",
                                 [](RunConfig& c) -> int& { return c.data.train_scenes; }));
  keys.push_back(number_key<int>("eval_scenes", "evaluation split size",
                                 [](RunConfig& c) -> int& { return c.data.eval_scenes; }));
  keys.push_back(number_key<std::uint64_t>("train_seed", "first scene seed of the training split",
                                           [](RunConfig& c) -> std::uint64_t& { return c.data.train_seed; }));
  keys.push_back(number_key<std::uint64_t>("eval_seed", "first scene seed of the evaluation split",
                                           [](RunConfig& c) -> std::uint64_t& { return c.data.eval_seed; }));
  keys.push_back(number_key<int>("image_size", "scene height and width",
                                 [](RunConfig& c) -> int& { return c.data.image_size; }));
  keys.push_back(number_key<int>("min_things", "fewest things per scene",
                                 [](RunConfig& c) -> int& { return c.data.min_things; }));
  keys.push_back(number_key<int>("max_things", "most things per scene",
                                 [](RunConfig& c) -> int& { return c.data.max_things; }));
  // Fusion.
  keys.push_back(number_key<double>("keep_fraction", "instance survival fraction in fusion",
                                    [](RunConfig& c) -> double& { return c.fusion.keep_fraction; }));
  keys.push_back(number_key<int>("stuff_area_min", "smallest stuff region kept by fusion",
                                 [](RunConfig& c) -> int& { return c.fusion.stuff_area_min; }));
  keys.push_back(number_key<double>("mask_threshold", "mask probability threshold",
                                    [](RunConfig& c) -> double& { return c.fusion.mask_threshold; }));
  return keys;
}

}  // namespace

SceneSpec DataConfig::base_spec() const {
  SceneSpec s;
  s.height = image_size;
  s.width = image_size;
  s.min_things = min_things;
  s.max_things = max_things;
  return s;
}

std::vector<Scene> make_split(const RunConfig& config, Split split) {
  const bool train = split == Split::kTrain;
  const std::vector<SceneSpec> specs =
      scene_split(train ? config.data.train_seed : config.data.eval_seed,
                  train ? config.data.train_scenes : config.data.eval_scenes,
                  config.data.base_spec());
  std::vector<Scene> scenes;
  scenes.reserve(specs.size());
  for (const SceneSpec& spec : specs) {
    scenes.push_back(generate_scene(spec, config.model.mask_resolution));
  }
  return scenes;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> kKeys = build_keys();
  return kKeys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("config line {}: expected key = value", line_no));
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const ConfigKey& k : config_keys()) {
    const std::string v = k.get(config);
    if (!v.empty()) out += fmt::format("{} = {}\n", k.name, v);
  }
  return out;
}

}  // namespace aunet
