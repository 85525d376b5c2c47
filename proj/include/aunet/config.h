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

#ifndef AUNET_CONFIG_H_
#define AUNET_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aunet/fusion.h"
#include "aunet/loss.h"
#include "aunet/model.h"
#include "aunet/train.h"

namespace aunet {

struct DataConfig {
  int train_scenes = 200;
  int eval_scenes = 50;
  std::uint64_t train_seed = 1000;
  std::uint64_t eval_seed = 900000;
  int image_size = 64;
  int min_things = 1;
  int max_things = 4;

  SceneSpec base_spec() const;
};

struct RunConfig {
  ModelConfig model;
  LossWeights loss;
  TrainConfig train;
  DataConfig data;
  FusionParams fusion;
};

enum class Split { kTrain, kEval };

// Generated scenes of the configured split (pure function of the config).
std::vector<Scene> make_split(const RunConfig& config, Split split);

// One `key = value` setting. Every key doubles as a --key command-line flag.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

// Throws std::invalid_argument for unknown keys or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Blank lines and '#' comments are skipped; later lines override earlier ones.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_config(const RunConfig& config);

}  // namespace aunet

#endif  // AUNET_CONFIG_H_
