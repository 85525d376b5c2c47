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

#include "aunet/ablation.h"

#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "aunet/evaluate.h"
#include "aunet/train.h"

namespace aunet {

std::vector<AblationRow> run_ablation(const std::vector<std::string>& rows,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunConfig& base, std::span<const Scene> train,
                                      std::span<const Scene> eval,
                                      const CategoryTable& categories) {
  std::vector<AblationRow> out;
  for (const std::string& name : rows) {
    AblationRow row;
    row.name = name;
    for (std::uint64_t seed : seeds) {
      ModelConfig mc = config_for_row(name, base.model);
      mc.init_seed = seed;
      TrainConfig tc = base.train;
      tc.seed = seed;
      Model model(mc);
      row.parameters = model.parameter_count();
      Trainer trainer(model, tc, base.loss, categories);
      trainer.run(train);
      EvalOptions options;
      options.fusion = base.fusion;
      const double pq = evaluate(model, eval, categories, options).pq.all.pq;
      spdlog::info("ablation {} seed {}: PQ {:.4f}", name, seed, pq);
      row.pq.push_back(pq);
    }
    const double n = static_cast<double>(row.pq.size());
    row.mean = n > 0 ? std::accumulate(row.pq.begin(), row.pq.end(), 0.0) / n : 0.0;
    if (row.pq.size() > 1) {
      double ss = 0;
      for (double v : row.pq) ss += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(ss / (n - 1));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = fmt::format("{:<8} {:>10} {:>8} {:>8}  {}\n", "setting", "params", "PQ", "sd",
                                "per-seed PQ");
  for (const AblationRow& r : rows) {
    std::string seeds;
    for (double v : r.pq) seeds += fmt::format(" {:.4f}", v);
    out += fmt::format("{:<8} {:>10} {:>8.4f} {:>8.4f} {}\n", r.name, r.parameters, r.mean,
                       r.stddev, seeds);
  }
  return out;
}

}  // namespace aunet
