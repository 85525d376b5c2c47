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

#ifndef AUNET_ABLATION_H_
#define AUNET_ABLATION_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aunet/config.h"
#include "aunet/scene.h"

namespace aunet {

struct AblationRow {
  std::string name;
  std::vector<double> pq;  // one per seed
  double mean = 0;
  double stddev = 0;       // sample standard deviation; 0 for one seed
  std::size_t parameters = 0;
};

// Trains and evaluates every row once per seed. The seed drives both
// parameter initialization and data order.
std::vector<AblationRow> run_ablation(const std::vector<std::string>& rows,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunConfig& base, std::span<const Scene> train,
                                      std::span<const Scene> eval,
                                      const CategoryTable& categories);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace aunet

#endif  // AUNET_ABLATION_H_
