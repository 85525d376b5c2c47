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

#ifndef AUNET_TRAIN_H_
#define AUNET_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "aunet/loss.h"
#include "aunet/model.h"
#include "aunet/scene.h"

namespace aunet {

struct TrainConfig {
  int steps = 2000;
  double base_lr = 0.01;
  std::vector<int> milestones{1400, 1800};  // lr *= decay_factor at each
  double decay_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  int batch_size = 1;
  std::uint64_t seed = 1;
  int log_every = 100;

  double lr_at(int step) const;
  void validate() const;
};

struct StepRecord {
  int step = 0;
  double lr = 0;
  LossValues loss;
};

// Momentum SGD with L2 weight decay: v = mu * v + (grad + wd * w); w -= lr * v.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<Param*> params, double momentum, double weight_decay);
  void zero_grad();
  void step(double lr);

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> velocity_;
  double momentum_;
  double weight_decay_;
};

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config, const LossWeights& weights,
          const CategoryTable& categories);

  // One optimizer step over the batch; gradients are averaged. Throws
  // std::runtime_error naming the component when a loss is not finite.
  StepRecord step(std::span<const Scene* const> batch);

  // Runs config.steps steps, visiting scenes in a seeded shuffled order.
  std::vector<StepRecord> run(std::span<const Scene> scenes,
                              const std::function<void(const StepRecord&)>& on_step = {});

  int steps_done() const { return step_; }

 private:
  Model& model_;
  TrainConfig config_;
  LossWeights weights_;
  const CategoryTable& categories_;
  SgdOptimizer optimizer_;
  int step_ = 0;
};

// Loss of one scene without touching parameters.
LossValues evaluate_loss(Model& model, const Scene& scene, const CategoryTable& categories,
                         const LossWeights& weights);

void save_checkpoint(const std::filesystem::path& path, Model& model);
// The model must have the same parameter layout as the one saved.
void load_checkpoint(const std::filesystem::path& path, Model& model);

}  // namespace aunet

#endif  // AUNET_TRAIN_H_
