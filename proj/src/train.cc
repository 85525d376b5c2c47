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

#include "aunet/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace aunet {

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'U', 'N', 'E', 'T', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint is truncated");
  return v;
}

}  // namespace

double TrainConfig::lr_at(int step) const {
  double lr = base_lr;
  for (int m : milestones) {
    if (step >= m) lr *= decay_factor;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (base_lr < 0) throw std::invalid_argument("learning rate must be nonnegative");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0, 1)");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be nonnegative");
  if (!std::is_sorted(milestones.begin(), milestones.end())) {
    throw std::invalid_argument("lr milestones must be ascending");
  }
}

SgdOptimizer::SgdOptimizer(std::vector<Param*> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  for (const Param* p : params_) velocity_.push_back(Tensor::zeros_like(p->value));
}

void SgdOptimizer::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void SgdOptimizer::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i]->value.data();
    auto grad = params_[i]->grad.data();
    auto v = velocity_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum_ * v[j] + grad[j] + weight_decay_ * w[j];
      w[j] -= lr * v[j];
    }
  }
}

Trainer::Trainer(Model& model, const TrainConfig& config, const LossWeights& weights,
                 const CategoryTable& categories)
    : model_(model),
      config_(config),
      weights_(weights),
      categories_(categories),
      optimizer_(model.params(), config.momentum, config.weight_decay) {
  config_.validate();
  weights_.validate();
}

StepRecord Trainer::step(std::span<const Scene* const> batch) {
  if (batch.empty()) throw std::invalid_argument("training batch is empty");
  optimizer_.zero_grad();
  StepRecord record;
  record.step = step_;
  record.lr = config_.lr_at(step_);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Scene* scene : batch) {
    const TrainingTarget target = make_target(*scene, categories_, model_.config());
    Graph g;
    const ModelOutputs outputs = model_.forward(g, scene->image, target.rois);
    const LossTerms terms = joint_loss(g, outputs, target, weights_);
    const LossValues values = loss_values(g, terms);
    const std::array<double, 4> parts{values.rpn, values.rcnn, values.mask, values.seg};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!std::isfinite(parts[i])) {
        throw std::runtime_error(fmt::format("non-finite {} loss ({}) at step {}",
                                             kLossComponentNames[i], parts[i], step_));
      }
    }
    g.backward(terms.total, Tensor(Shape{1, 1, 1, 1}, scale));
    record.loss.total += scale * values.total;
    record.loss.rpn += scale * values.rpn;
    record.loss.rcnn += scale * values.rcnn;
    record.loss.mask += scale * values.mask;
    record.loss.seg += scale * values.seg;
  }
  optimizer_.step(record.lr);
  ++step_;
  return record;
}

std::vector<StepRecord> Trainer::run(std::span<const Scene> scenes,
                                     const std::function<void(const StepRecord&)>& on_step) {
  if (scenes.empty()) throw std::invalid_argument("no training scenes");
  std::mt19937_64 rng(config_.seed);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<StepRecord> records;
  std::vector<const Scene*> batch;
  while (step_ < config_.steps) {
    batch.clear();
    for (int b = 0; b < config_.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&scenes[order[cursor++]]);
    }
    records.push_back(step(batch));
    const StepRecord& r = records.back();
    if (config_.log_every > 0 && (r.step % config_.log_every == 0 || r.step + 1 == config_.steps)) {
      spdlog::info("step {:5d} lr {:.4g} loss {:.4f} (rpn {:.4f} rcnn {:.4f} mask {:.4f} seg {:.4f})",
                   r.step, r.lr, r.loss.total, r.loss.rpn, r.loss.rcnn, r.loss.mask, r.loss.seg);
    }
    if (on_step) on_step(r);
  }
  return records;
}

LossValues evaluate_loss(Model& model, const Scene& scene, const CategoryTable& categories,
                         const LossWeights& weights) {
  const TrainingTarget target = make_target(scene, categories, model.config());
  Graph g;
  const ModelOutputs outputs = model.forward(g, scene.image, target.rois);
  return loss_values(g, joint_loss(g, outputs, target, weights));
}

void save_checkpoint(const std::filesystem::path& path, Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::vector<Param*> params = model.params();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const Shape s = p->value.shape();
    for (int d : {s.n, s.c, s.h, s.w}) write_pod<std::int32_t>(out, d);
    const auto data = p->value.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(Real)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, Model& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw std::runtime_error(path.string() + " is not a checkpoint");
  }
  const std::vector<Param*> params = model.params();
  const auto count = read_pod<std::uint32_t>(in);
  if (count != params.size()) {
    throw std::runtime_error(fmt::format("checkpoint has {} parameters, model has {}", count,
                                         params.size()));
  }
  for (Param* p : params) {
    std::string name(read_pod<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    Shape s;
    s.n = read_pod<std::int32_t>(in);
    s.c = read_pod<std::int32_t>(in);
    s.h = read_pod<std::int32_t>(in);
    s.w = read_pod<std::int32_t>(in);
    if (name != p->name || s != p->value.shape()) {
      throw std::runtime_error(fmt::format("checkpoint entry {} {} does not match {} {}", name,
                                           s.str(), p->name, p->value.shape().str()));
    }
    auto data = p->value.data();
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(Real)));
    if (!in) throw std::runtime_error("checkpoint is truncated");
  }
}

}  // namespace aunet
